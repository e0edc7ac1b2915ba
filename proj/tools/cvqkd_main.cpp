// Command-line front end: `simulate` runs a scenario or a launch-power sweep
// and writes CSV + SVG; `calibrate` fits the crosstalk/key-rate parameters
// against a reference file. Exit codes: 0 ok, 2 configuration error,
// 3 numerical failure.

#include "cvqkd/calibration_fit.hpp"
#include "cvqkd/errors.hpp"
#include "cvqkd/report.hpp"
#include "cvqkd/scenario.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <vector>

namespace {

std::vector<double> parse_sweep_arg(const std::string& arg) {
  std::vector<double> parts;
  std::stringstream ss(arg);
  std::string item;
  while (std::getline(ss, item, ',')) parts.push_back(std::stod(item));
  if (parts.size() != 3)
    throw cvqkd::ConfigError("--power-sweep expects start,stop,step");
  return cvqkd::power_range(parts[0], parts[1], parts[2]);
}

void print_rows(const std::vector<cvqkd::SweepRow>& rows) {
  std::printf("%-22s %10s %12s %12s %8s %12s\n", "scenario", "P(dBm)", "xi_B(SNU)", "std",
              "T_hat", "SKR(bit/s)");
  for (const auto& r : rows)
    std::printf("%-22s %10.2f %12.5g %12.5g %8.4f %12.5g\n", r.scenario.c_str(),
                r.total_launch_power_dbm, r.xi_b_mean, r.xi_b_std, r.t_hat, r.skr_bps);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"CV-QKD / classical WDM coexistence simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", scenario_name, sweep_arg, refs_path;
  std::optional<long long> seed_override;

  auto* sim = app.add_subcommand("simulate", "run a scenario or launch-power sweep");
  sim->add_option("--config", config_path, "scenario config file")->required();
  sim->add_option("--power-sweep", sweep_arg, "start,stop,step in dBm");
  sim->add_option("--scenario", scenario_name,
                  "plan override: FIVE_NM_FIBER|FIVE_NM_FSO|ONE_NM_UPPER|ONE_NM_LOWER");
  sim->add_option("--out", out_dir, "output directory");
  sim->add_option("--seed", seed_override, "seed override");

  auto* cal = app.add_subcommand("calibrate", "fit crosstalk scale and (beta, v_el) to references");
  cal->add_option("--config", config_path, "scenario config file")->required();
  cal->add_option("--refs", refs_path, "reference points file")->required();
  cal->add_option("--out", out_dir, "output directory");
  cal->add_option("--seed", seed_override, "seed override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    auto kv = cvqkd::KeyValueConfig::from_file(config_path);
    cvqkd::ScenarioConfig cfg = cvqkd::scenario_from_config(kv);
    kv.reject_unknown_keys();
    if (seed_override) cfg.seed = static_cast<std::uint64_t>(*seed_override);
    std::filesystem::create_directories(out_dir);

    if (sim->parsed()) {
      if (!scenario_name.empty()) cfg.plan = cvqkd::plan_kind_from_string(scenario_name);

      std::vector<cvqkd::SweepRow> rows;
      if (!sweep_arg.empty()) {
        rows = cvqkd::sweep(cfg, parse_sweep_arg(sweep_arg));
      } else {
        rows.push_back(cvqkd::run_scenario(cfg).row);
      }
      print_rows(rows);

      const std::string stem = out_dir + "/" + cfg.label();
      cvqkd::write_sweep_csv(rows, stem + ".csv");
      cvqkd::write_sweep_svg(rows, cfg.label(), stem + ".svg");
      std::printf("wrote %s.csv and %s.svg\n", stem.c_str(), stem.c_str());
    } else {
      auto refs_kv = cvqkd::KeyValueConfig::from_file(refs_path);
      const cvqkd::ReferencePoints refs = cvqkd::references_from_config(refs_kv);
      const cvqkd::CalibrationOutcome outcome = cvqkd::calibrate_to_references(cfg, refs);
      const std::string report = outcome.report(refs);
      std::cout << report;

      std::ofstream rep(out_dir + "/calibration_report.txt");
      rep << report;
      std::ofstream fitted(out_dir + "/fitted_params.cfg");
      fitted << "ase.psd_at_source_w_hz = " << outcome.ase.psd_at_source_w_hz << "\n"
             << "security.beta = " << outcome.beta << "\n"
             << "detector.v_el_snu = " << outcome.v_el << "\n";
      std::printf("wrote %s/calibration_report.txt and %s/fitted_params.cfg\n", out_dir.c_str(),
                  out_dir.c_str());
    }
  } catch (const cvqkd::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const cvqkd::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
