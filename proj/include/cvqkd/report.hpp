#pragma once

#include "cvqkd/scenario.hpp"

#include <string>
#include <vector>

namespace cvqkd {

// CSV is the canonical sweep output: header
//   scenario,power_dbm,xi_b_mean,xi_b_std,t_hat,skr_bps
// with numbers serialized at 9 significant digits.
std::string sweep_to_csv(const std::vector<SweepRow>& rows);
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);
std::vector<SweepRow> parse_sweep_csv(const std::string& csv_text);
std::vector<SweepRow> read_sweep_csv(const std::string& path);

/// Line chart of xi_B vs launch power with error bars, one polyline per
/// scenario label. Self-contained SVG, no plotting dependency.
std::string sweep_to_svg(const std::vector<SweepRow>& rows, const std::string& title);
void write_sweep_svg(const std::vector<SweepRow>& rows, const std::string& title,
                     const std::string& path);

} // namespace cvqkd
