#pragma once

#include "cvqkd/scenario.hpp"

#include <optional>
#include <string>

namespace cvqkd {

// Reference points the calibration fits or checks against. Ratios are total
// values relative to the filtered baseline at maximum power (a 275% increase
// is a ratio of 3.75).
struct ReferencePoints {
  double power_low_dbm = -21.37;
  double power_high_dbm = 8.46;
  std::optional<double> no_bpf_ratio;       // fit anchor for the ASE scale
  std::optional<double> skr_low_bps;        // fit targets for (beta, v_el)
  std::optional<double> skr_high_bps;
  std::optional<double> one_nm_ratio;       // held out: reported, never fitted
  std::optional<double> one_nm_vs_no_bpf;   // held out: fractional reduction

  int provided() const;
};

ReferencePoints references_from_config(KeyValueConfig& cfg);

struct CalibrationOutcome {
  AseModel ase;        // fitted psd_at_source, remaining fields carried
  int bpf_order = 2;   // carried, reported with the fit
  double beta = 0.95;
  double v_el = 0.1;

  // Measured inputs and model outputs, for the report.
  double baseline_xi_b = 0.0;    // filtered 5-nm fiber scenario at max power
  double baseline_t_hat = 0.0;
  double no_bpf_base_xi_b = 0.0; // filterless scenario, crosstalk model off
  double no_bpf_xi_b = 0.0;      // model value at max power after the fit
  double one_nm_xi_b_low = 0.0;
  double one_nm_xi_b_high = 0.0;
  double skr_low_bps = 0.0;
  double skr_high_bps = 0.0;

  double predicted_one_nm_increase() const; // vs baseline, at max power
  double predicted_one_nm_vs_no_bpf() const;
  std::string report(const ReferencePoints& refs) const;
};

// Fits the small free parameter set against the reference deltas:
//  * psd_at_source from the filterless anchor ratio (exactly solvable: the
//    crosstalk model is linear in the PSD),
//  * (beta, v_el) by least squares against the two key-rate references.
// Spectral shape constants (notch, pedestal width, detector conversion,
// filter order) are carried as configured, so any further reference points
// stay genuine held-out checks.
CalibrationOutcome calibrate_to_references(const ScenarioConfig& cfg_template,
                                      const ReferencePoints& refs);

} // namespace cvqkd
