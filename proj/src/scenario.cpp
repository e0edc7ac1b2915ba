#include "cvqkd/scenario.hpp"

#include "cvqkd/errors.hpp"
#include "cvqkd/parallel.hpp"
#include "cvqkd/rng.hpp"

#include <cmath>
#include <mutex>

namespace cvqkd {

std::string to_string(WdmPlanKind kind) {
  switch (kind) {
    case WdmPlanKind::FiveNmFiber: return "FIVE_NM_FIBER";
    case WdmPlanKind::FiveNmFso: return "FIVE_NM_FSO";
    case WdmPlanKind::OneNmUpper: return "ONE_NM_UPPER";
    case WdmPlanKind::OneNmLower: return "ONE_NM_LOWER";
  }
  throw ConfigError("unknown plan kind");
}

WdmPlanKind plan_kind_from_string(const std::string& name) {
  if (name == "FIVE_NM_FIBER") return WdmPlanKind::FiveNmFiber;
  if (name == "FIVE_NM_FSO") return WdmPlanKind::FiveNmFso;
  if (name == "ONE_NM_UPPER") return WdmPlanKind::OneNmUpper;
  if (name == "ONE_NM_LOWER") return WdmPlanKind::OneNmLower;
  throw ConfigError("unknown scenario plan: " + name +
                    " (expected FIVE_NM_FIBER, FIVE_NM_FSO, ONE_NM_UPPER or ONE_NM_LOWER)");
}

void ScenarioConfig::validate() const {
  if (block_length < 1000) throw ConfigError("scenario: block_length must be >= 1e3 symbols");
  if (blocks < 1) throw ConfigError("scenario: need at least one block");
  if (total_launch_power_dbm < -30.0 || total_launch_power_dbm > 15.0)
    throw ConfigError("scenario: total launch power outside [-30, 15] dBm");
  if (!(modulation_variance > 0.0)) throw ConfigError("scenario: V_A must be > 0");
  dsp.validate();
}

LinkSpec ScenarioConfig::link() const {
  LinkSpec l;
  l.extra_loss_db = extra_loss_db;
  if (plan == WdmPlanKind::FiveNmFso) {
    l.fso_loss_db = fso_loss_db;
  } else {
    l.fiber_length_km = fiber_length_km;
    l.fiber_attenuation_db_km = fiber_attenuation_db_km;
  }
  return l;
}

std::optional<BpfSpec> ScenarioConfig::bpf() const {
  if (!bpf_enabled) return std::nullopt;
  BpfSpec b;
  b.center_wavelength_nm = quantum_wavelength_nm;
  b.bw_3db_nm = bpf_bw_nm;
  b.order = bpf_order;
  b.insertion_loss_db = bpf_insertion_loss_db;
  return b;
}

WdmPlan ScenarioConfig::wdm_plan() const {
  double nearest_nm = 0.0;
  switch (plan) {
    case WdmPlanKind::FiveNmFiber:
    case WdmPlanKind::FiveNmFso: nearest_nm = quantum_wavelength_nm + 5.0; break;
    case WdmPlanKind::OneNmUpper: nearest_nm = quantum_wavelength_nm + 1.0; break;
    case WdmPlanKind::OneNmLower: nearest_nm = quantum_wavelength_nm - 1.0; break;
  }
  WdmPlan p = make_wdm_plan(nearest_nm, quantum_wavelength_nm, wdm_channel_count, wdm_grid_ghz,
                            wdm_channel_baud, total_launch_power_dbm);
  p.validate_against_quantum(quantum_wavelength_nm, signal_bandwidth_hz());
  return p;
}

std::string ScenarioConfig::label() const {
  return to_string(plan) + (bpf_enabled ? "" : "_NO_BPF");
}

ScenarioConfig scenario_from_config(KeyValueConfig& cfg) {
  ScenarioConfig s;
  s.quantum_wavelength_nm = cfg.get_double("quantum.wavelength_nm", s.quantum_wavelength_nm);
  s.constellation_order = static_cast<int>(cfg.get_int("constellation.order", s.constellation_order));
  s.shaping_entropy_bits = cfg.get_double("constellation.entropy_bits", s.shaping_entropy_bits);
  const std::string nu = cfg.get_string("constellation.nu", "auto");
  if (nu != "auto") s.shaping_nu = cfg.get_double("constellation.nu", 0.0);
  s.modulation_variance = cfg.get_double("constellation.va_snu", s.modulation_variance);
  s.symbol_rate = cfg.get_double("frame.symbol_rate_hz", s.symbol_rate);
  s.pilot_fraction = cfg.get_double("frame.pilot_fraction", s.pilot_fraction);
  s.samples_per_symbol = static_cast<int>(cfg.get_int("frame.samples_per_symbol", s.samples_per_symbol));
  s.rrc_rolloff = cfg.get_double("frame.rrc_rolloff", s.rrc_rolloff);
  s.rrc_span_symbols = static_cast<int>(cfg.get_int("frame.rrc_span_symbols", s.rrc_span_symbols));
  s.pilot_power_boost_db = cfg.get_double("frame.pilot_boost_db", s.pilot_power_boost_db);

  s.plan = plan_kind_from_string(cfg.get_string("scenario.plan", to_string(s.plan)));
  s.wdm_channel_count = static_cast<int>(cfg.get_int("wdm.channel_count", s.wdm_channel_count));
  s.wdm_grid_ghz = cfg.get_double("wdm.grid_ghz", s.wdm_grid_ghz);
  s.wdm_channel_baud = cfg.get_double("wdm.channel_baud_hz", s.wdm_channel_baud);
  s.fiber_length_km = cfg.get_double("link.fiber_length_km", s.fiber_length_km);
  s.fiber_attenuation_db_km = cfg.get_double("link.fiber_attenuation_db_km", s.fiber_attenuation_db_km);
  s.fso_loss_db = cfg.get_double("link.fso_loss_db", s.fso_loss_db);
  s.extra_loss_db = cfg.get_double("link.extra_loss_db", s.extra_loss_db);

  s.bpf_enabled = cfg.get_bool("bpf.enabled", s.bpf_enabled);
  s.bpf_bw_nm = cfg.get_double("bpf.bw_nm", s.bpf_bw_nm);
  s.bpf_order = static_cast<int>(cfg.get_int("bpf.order", s.bpf_order));
  s.bpf_insertion_loss_db = cfg.get_double("bpf.insertion_loss_db", s.bpf_insertion_loss_db);
  s.eta_with_bpf = cfg.get_double("detector.eta_with_bpf", s.eta_with_bpf);
  s.eta_without_bpf = cfg.get_double("detector.eta_without_bpf", s.eta_without_bpf);
  s.v_el = cfg.get_double("detector.v_el_snu", s.v_el);
  s.estimate_calibration = cfg.get_bool("detector.estimate_calibration", s.estimate_calibration);
  s.calibration_samples = cfg.get_int("detector.calibration_samples", s.calibration_samples);
  s.shot_noise_raw = cfg.get_double("detector.shot_noise_raw", s.shot_noise_raw);

  s.ase.psd_at_source_w_hz = cfg.get_double("ase.psd_at_source_w_hz", s.ase.psd_at_source_w_hz);
  s.ase.notch_suppression_db = cfg.get_double("ase.notch_db", s.ase.notch_suppression_db);
  s.ase.reference_power_dbm = cfg.get_double("ase.reference_power_dbm", s.ase.reference_power_dbm);
  s.ase.pedestal_sigma_hz = cfg.get_double("ase.pedestal_sigma_hz", s.ase.pedestal_sigma_hz);
  s.ase.dd_conversion = cfg.get_double("ase.dd_conversion", s.ase.dd_conversion);
  s.raman_enabled = cfg.get_bool("raman.enabled", s.raman_enabled);
  s.raman_table_path = cfg.get_string("raman.table", s.raman_table_path);
  s.laser.combined_linewidth_hz = cfg.get_double("laser.combined_linewidth_hz", s.laser.combined_linewidth_hz);
  s.laser.frequency_offset_hz = cfg.get_double("laser.frequency_offset_hz", s.laser.frequency_offset_hz);

  s.dsp.cfo_search_range_hz = cfg.get_double("dsp.cfo_search_range_hz", s.dsp.cfo_search_range_hz);
  s.dsp.cfo_fft_size = static_cast<int>(cfg.get_int("dsp.cfo_fft_size", s.dsp.cfo_fft_size));
  s.dsp.equalizer_taps = static_cast<int>(cfg.get_int("dsp.equalizer_taps", s.dsp.equalizer_taps));
  s.dsp.equalizer_step = cfg.get_double("dsp.equalizer_step", s.dsp.equalizer_step);
  s.dsp.phase_pilot_window = static_cast<int>(cfg.get_int("dsp.phase_pilot_window", s.dsp.phase_pilot_window));
  s.dsp.adc_bits = static_cast<int>(cfg.get_int("dsp.adc_bits", s.dsp.adc_bits));
  s.dsp.adc_full_scale = cfg.get_double("dsp.adc_full_scale", s.dsp.adc_full_scale);

  s.beta = cfg.get_double("security.beta", s.beta);
  s.fer = cfg.get_double("security.fer", s.fer);

  s.total_launch_power_dbm = cfg.get_double("run.total_launch_power_dbm", s.total_launch_power_dbm);
  s.blocks = static_cast<int>(cfg.get_int("run.blocks", s.blocks));
  s.block_length = cfg.get_int("run.block_length", s.block_length);
  s.seed = static_cast<std::uint64_t>(cfg.get_int("run.seed", static_cast<long long>(s.seed)));
  s.validate();
  return s;
}

double channel_noise_snu(const ScenarioConfig& cfg) {
  double power_w = 0.0;
  const WdmPlan plan = cfg.wdm_plan();
  if (cfg.ase.psd_at_source_w_hz > 0.0)
    power_w += ase_inband_power(cfg.ase, plan, cfg.bpf(), cfg.quantum_wavelength_nm,
                                cfg.signal_bandwidth_hz());
  if (cfg.raman_enabled) {
    if (cfg.raman_table_path.empty())
      throw ConfigError("raman.enabled requires raman.table");
    const RamanTable table = load_raman_table(cfg.raman_table_path);
    power_w += raman_power(plan, cfg.link(), cfg.quantum_wavelength_nm, table,
                           cfg.signal_bandwidth_hz());
  }
  // Channel-referred injection: detection efficiency is applied physically in
  // detect(), so the receiver-referred crosstalk comes out as eta times this.
  return noise_to_excess(power_w, cfg.quantum_wavelength_nm, cfg.symbol_rate);
}

namespace {

// The detector hardware always runs at the true constants; in estimated mode
// the receiver additionally derives its working calibration from simulated
// vacuum (LO on, signal blocked) and electronic (LO off) captures, like the
// real receiver's calibration mode.
CalibrationSet estimate_scenario_calibration(const ScenarioConfig& cfg,
                                             const CalibrationSet& truth) {
  Rng rng(derive_seed(cfg.seed, 0xca1, 0));
  const Eigen::Index n = cfg.calibration_samples;
  const RxCapture vacuum =
      detect(ComplexArray::Zero(n), cfg.symbol_rate * cfg.samples_per_symbol, truth,
             derive_seed(cfg.seed, 0xca1, 1));
  const ComplexArray electronic =
      rng.complex_gaussian_array(n, truth.electronic_noise_variance);
  return calibrate(vacuum.samples, electronic, cfg.eta());
}

} // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  try {
    const double nu = cfg.shaping_nu >= 0.0
                          ? cfg.shaping_nu
                          : shaping_rate_for_entropy(cfg.constellation_order, cfg.shaping_entropy_bits);
    const ConstellationSpec constellation =
        build_constellation(cfg.constellation_order, nu, cfg.modulation_variance);
    const FrameSpec frame_spec =
        make_frame_spec(constellation, cfg.symbol_rate, cfg.pilot_fraction,
                        cfg.samples_per_symbol, cfg.rrc_rolloff, cfg.rrc_span_symbols,
                        cfg.pilot_power_boost_db);
    const CalibrationSet truth = make_calibration(cfg.eta(), cfg.v_el, cfg.shot_noise_raw);
    const CalibrationSet cal =
        cfg.estimate_calibration ? estimate_scenario_calibration(cfg, truth) : truth;
    const double transmittance = link_transmittance(cfg.link());
    const double noise_snu = channel_noise_snu(cfg);
    const double sample_rate = frame_spec.sample_rate();

    std::vector<RecoveredBlock> blocks(cfg.blocks);
    parallel_for_indexed(cfg.blocks, [&](int b) {
      const std::uint64_t s = derive_seed(cfg.seed, 0xb10c, static_cast<std::uint64_t>(b));
      const SymbolFrame frame =
          generate_frame(constellation, frame_spec, cfg.block_length, derive_seed(s, 1));
      ComplexArray wave = pulse_shape(frame);
      wave = propagate(wave, transmittance, cfg.laser, noise_snu, sample_rate, derive_seed(s, 2));
      RxCapture capture = detect(wave, sample_rate, truth, derive_seed(s, 3));
      capture.cal = cal; // receiver-side processing sees the working calibration
      blocks[b] = process_block(capture, frame, cfg.dsp);
    });

    ScenarioResult result;
    result.estimate = estimate_parameters(blocks, cfg.modulation_variance, cal);

    SecurityParams params;
    params.beta = cfg.beta;
    params.fer = cfg.fer;
    params.symbol_rate = cfg.symbol_rate;
    params.pilot_fraction = cfg.pilot_fraction;
    result.skr = secret_key_rate(result.estimate, cfg.modulation_variance, cal, params);

    result.predicted_ase_xi_b = cfg.eta() * noise_snu;
    result.row.scenario = cfg.label();
    result.row.total_launch_power_dbm = cfg.total_launch_power_dbm;
    result.row.xi_b_mean = result.estimate.xi_B_hat;
    result.row.xi_b_std = result.estimate.xi_B_std();
    result.row.t_hat = result.estimate.T_hat;
    result.row.skr_bps = result.skr.skr_bps;
    return result;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw NumericalError("scenario " + cfg.label() + " at " +
                         std::to_string(cfg.total_launch_power_dbm) + " dBm: " + e.what());
  }
}

std::vector<SweepRow> sweep(const ScenarioConfig& cfg_template,
                            const std::vector<double>& powers_dbm) {
  if (powers_dbm.empty()) throw ConfigError("sweep: empty power list");
  for (const double p : powers_dbm)
    if (p < -30.0 || p > 15.0) throw ConfigError("sweep: power outside [-30, 15] dBm");

  std::vector<SweepRow> rows(powers_dbm.size());
  for (std::size_t i = 0; i < powers_dbm.size(); ++i) {
    ScenarioConfig cfg = cfg_template;
    cfg.total_launch_power_dbm = powers_dbm[i];
    cfg.seed = cfg_template.seed + i; // per-point stream
    rows[i] = run_scenario(cfg).row;
  }
  return rows;
}

std::vector<double> power_range(double start_dbm, double stop_dbm, double step_db) {
  if (!(step_db > 0.0)) throw ConfigError("power range: step must be > 0");
  std::vector<double> powers;
  for (double p = start_dbm; p <= stop_dbm + 1e-9; p += step_db) powers.push_back(p);
  return powers;
}

} // namespace cvqkd
