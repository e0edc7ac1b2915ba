#pragma once

#include "cvqkd/alice.hpp"
#include "cvqkd/bob.hpp"
#include "cvqkd/channel.hpp"
#include "cvqkd/config.hpp"
#include "cvqkd/security.hpp"
#include "cvqkd/snu.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cvqkd {

// The classical channel placements studied: 15 channels starting 5 nm above
// the quantum carrier (free-space or fiber link), or 1 nm away on either
// side (fiber link).
enum class WdmPlanKind { FiveNmFiber, FiveNmFso, OneNmUpper, OneNmLower };

std::string to_string(WdmPlanKind kind);
WdmPlanKind plan_kind_from_string(const std::string& name);

struct ScenarioConfig {
  // Quantum signal
  double quantum_wavelength_nm = 1550.0;
  int constellation_order = 256;
  double shaping_entropy_bits = 6.0; // used when shaping_nu < 0 ("auto")
  double shaping_nu = -1.0;
  double modulation_variance = 8.0;
  double symbol_rate = 250e6;
  double pilot_fraction = 0.5;
  int samples_per_symbol = 8;
  double rrc_rolloff = 0.2;
  int rrc_span_symbols = 20;
  double pilot_power_boost_db = 15.0;

  // Coexistence plan and link
  WdmPlanKind plan = WdmPlanKind::FiveNmFso;
  int wdm_channel_count = 15;
  double wdm_grid_ghz = 50.0;
  double wdm_channel_baud = 45e9;
  double fiber_length_km = 12.8;
  double fiber_attenuation_db_km = 0.2;
  double fso_loss_db = 3.85;
  double extra_loss_db = 0.0;

  // Receiver front end
  bool bpf_enabled = true;
  double bpf_bw_nm = 1.00;
  int bpf_order = 2;
  double bpf_insertion_loss_db = 0.0; // folded into eta
  double eta_with_bpf = 0.35;
  double eta_without_bpf = 0.67;
  double v_el = 0.1;
  bool estimate_calibration = false; // simulate calibration captures
  Eigen::Index calibration_samples = 200000;
  double shot_noise_raw = 6.25e-6; // raw detector variance of the vacuum capture

  // Noise models. The ASE defaults are the desk-scale effective values: the
  // PSD scale is what `calibrate` refits against the filterless anchor, and
  // dd_conversion / pedestal width set the relative crosstalk geometry
  // between the channel placements.
  AseModel ase{2.1e-21, 60.0, 0.0, 45e9, 6e-6};
  bool raman_enabled = false;
  std::string raman_table_path;
  LaserSpec laser{5e3, 3e6};

  // DSP + security
  DspConfig dsp;
  double beta = 0.95;
  double fer = 0.0;

  // Run control
  double total_launch_power_dbm = -21.37;
  int blocks = 30;
  Eigen::Index block_length = 100000; // symbols per block
  std::uint64_t seed = 1;

  void validate() const;

  // Derived pieces
  double signal_bandwidth_hz() const { return symbol_rate * (1.0 + rrc_rolloff); }
  double eta() const { return bpf_enabled ? eta_with_bpf : eta_without_bpf; }
  LinkSpec link() const;
  std::optional<BpfSpec> bpf() const;
  WdmPlan wdm_plan() const;
  std::string label() const;
};

/// Parses a flat key-value config; unknown keys are errors. Defaults follow
/// the experiment's parameters.
ScenarioConfig scenario_from_config(KeyValueConfig& cfg);

struct SweepRow {
  std::string scenario;
  double total_launch_power_dbm = 0.0;
  double xi_b_mean = 0.0;
  double xi_b_std = 0.0;
  double t_hat = 0.0;
  double skr_bps = 0.0;
};

struct ScenarioResult {
  SweepRow row;
  ChannelEstimate estimate;
  SkrReport skr;
  double predicted_ase_xi_b = 0.0; // model value for the injected crosstalk
};

/// Per-quadrature per-mode channel noise (SNU at the receiver input, before
/// detection efficiency) from the ASE and Raman models at the configured
/// launch power.
double channel_noise_snu(const ScenarioConfig& cfg);

/// Full pipeline over `blocks` independent blocks; deterministic given the
/// seed. Blocks are processed on a worker pool (CVQKD_THREADS caps it) and
/// aggregated in index order.
ScenarioResult run_scenario(const ScenarioConfig& cfg);

/// One row per launch power, seeded as seed = base_seed + point_index.
std::vector<SweepRow> sweep(const ScenarioConfig& cfg_template,
                            const std::vector<double>& powers_dbm);

/// Inclusive power list from start to stop in `step` increments.
std::vector<double> power_range(double start_dbm, double stop_dbm, double step_db);

} // namespace cvqkd
