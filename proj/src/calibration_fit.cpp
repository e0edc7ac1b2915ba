#include "cvqkd/calibration_fit.hpp"

#include "cvqkd/errors.hpp"

#include <cmath>
#include <sstream>

namespace cvqkd {

int ReferencePoints::provided() const {
  int n = 0;
  for (const auto& r : {no_bpf_ratio, skr_low_bps, skr_high_bps, one_nm_ratio, one_nm_vs_no_bpf})
    if (r) ++n;
  return n;
}

ReferencePoints references_from_config(KeyValueConfig& cfg) {
  ReferencePoints refs;
  refs.power_low_dbm = cfg.get_double("refs.power_low_dbm", refs.power_low_dbm);
  refs.power_high_dbm = cfg.get_double("refs.power_high_dbm", refs.power_high_dbm);
  if (cfg.has("refs.no_bpf_ratio")) refs.no_bpf_ratio = cfg.get_double("refs.no_bpf_ratio", 0.0);
  if (cfg.has("refs.skr_low_bps")) refs.skr_low_bps = cfg.get_double("refs.skr_low_bps", 0.0);
  if (cfg.has("refs.skr_high_bps")) refs.skr_high_bps = cfg.get_double("refs.skr_high_bps", 0.0);
  if (cfg.has("refs.one_nm_ratio")) refs.one_nm_ratio = cfg.get_double("refs.one_nm_ratio", 0.0);
  if (cfg.has("refs.one_nm_vs_no_bpf"))
    refs.one_nm_vs_no_bpf = cfg.get_double("refs.one_nm_vs_no_bpf", 0.0);
  cfg.reject_unknown_keys();
  return refs;
}

double CalibrationOutcome::predicted_one_nm_increase() const {
  return one_nm_xi_b_high / baseline_xi_b - 1.0;
}

double CalibrationOutcome::predicted_one_nm_vs_no_bpf() const {
  return 1.0 - one_nm_xi_b_high / no_bpf_xi_b;
}

namespace {

/// Model crosstalk contribution to Bob's excess noise (SNU) for a scenario
/// configuration, per unit psd_at_source. Linear in the PSD by construction.
double ase_xi_per_psd(ScenarioConfig cfg, double power_dbm) {
  cfg.total_launch_power_dbm = power_dbm;
  cfg.ase.psd_at_source_w_hz = 1.0;
  cfg.raman_enabled = false;
  return cfg.eta() * channel_noise_snu(cfg);
}

ScenarioConfig with_plan(ScenarioConfig cfg, WdmPlanKind plan, bool bpf, double power_dbm) {
  cfg.plan = plan;
  cfg.bpf_enabled = bpf;
  cfg.total_launch_power_dbm = power_dbm;
  return cfg;
}

} // namespace

CalibrationOutcome calibrate_to_references(const ScenarioConfig& cfg_template,
                                      const ReferencePoints& refs) {
  if (refs.provided() < 2)
    throw FitDiverged("calibration underdetermined: need at least two reference points");
  if (!refs.no_bpf_ratio)
    throw FitDiverged("calibration needs the filterless anchor ratio (refs.no_bpf_ratio)");

  CalibrationOutcome out;
  out.ase = cfg_template.ase;
  out.bpf_order = cfg_template.bpf_order;
  out.beta = cfg_template.beta;
  out.v_el = cfg_template.v_el;

  // Measured baseline: filtered 5-nm fiber scenario at maximum power.
  const ScenarioConfig base_cfg =
      with_plan(cfg_template, WdmPlanKind::FiveNmFiber, true, refs.power_high_dbm);
  const ScenarioResult base = run_scenario(base_cfg);
  out.baseline_xi_b = base.estimate.xi_B_hat;
  out.baseline_t_hat = base.estimate.T_hat;
  if (out.baseline_xi_b <= 0.0)
    throw FitDiverged("calibration: baseline excess noise is not positive");

  // Measured filterless baseline with the crosstalk model switched off.
  ScenarioConfig nb_cfg =
      with_plan(cfg_template, WdmPlanKind::FiveNmFiber, false, refs.power_high_dbm);
  nb_cfg.ase.psd_at_source_w_hz = 0.0;
  nb_cfg.raman_enabled = false;
  out.no_bpf_base_xi_b = run_scenario(nb_cfg).estimate.xi_B_hat;

  // Anchor: xi_nb(P_max) = ratio * baseline. The model is linear in the PSD,
  // so the least-squares solution for one anchor is the exact ratio.
  const double required_delta = *refs.no_bpf_ratio * out.baseline_xi_b - out.no_bpf_base_xi_b;
  if (required_delta <= 0.0)
    throw FitDiverged("calibration: filterless baseline already exceeds the anchor");
  const double coeff_nb = ase_xi_per_psd(
      with_plan(cfg_template, WdmPlanKind::FiveNmFiber, false, refs.power_high_dbm),
      refs.power_high_dbm);
  if (!(coeff_nb > 0.0))
    throw FitDiverged("calibration: crosstalk model yields no filterless response; check dd_conversion");
  out.ase.psd_at_source_w_hz = required_delta / coeff_nb;
  out.no_bpf_xi_b = out.no_bpf_base_xi_b + required_delta;

  // Held-out prediction path: 1-nm plan, filter on.
  const ScenarioConfig one_cfg =
      with_plan(cfg_template, WdmPlanKind::OneNmUpper, true, refs.power_high_dbm);
  const double one_low =
      out.ase.psd_at_source_w_hz * ase_xi_per_psd(one_cfg, refs.power_low_dbm);
  const double one_high =
      out.ase.psd_at_source_w_hz * ase_xi_per_psd(one_cfg, refs.power_high_dbm);
  out.one_nm_xi_b_low = out.baseline_xi_b + one_low;
  out.one_nm_xi_b_high = out.baseline_xi_b + one_high;

  // Key-rate fit on (beta, v_el) at the 1-nm fiber operating points.
  if (refs.skr_low_bps || refs.skr_high_bps) {
    const double eta = cfg_template.eta_with_bpf;
    const double t_hat = std::min(1.0, out.baseline_t_hat);
    const double xi_a_low = out.one_nm_xi_b_low / (eta * t_hat);
    const double xi_a_high = out.one_nm_xi_b_high / (eta * t_hat);

    SecurityParams params;
    params.fer = cfg_template.fer;
    params.symbol_rate = cfg_template.symbol_rate;
    params.pilot_fraction = cfg_template.pilot_fraction;

    const auto residual = [&](double beta, double v_el) {
      params.beta = beta;
      const CalibrationSet cal = make_calibration(eta, v_el);
      double r = 0.0;
      if (refs.skr_low_bps) {
        const double skr =
            secret_key_rate(cfg_template.modulation_variance, t_hat, xi_a_low, cal, params)
                .skr_bps;
        r += std::pow((skr - *refs.skr_low_bps) / *refs.skr_low_bps, 2);
      }
      if (refs.skr_high_bps) {
        const double skr =
            secret_key_rate(cfg_template.modulation_variance, t_hat, xi_a_high, cal, params)
                .skr_bps;
        r += std::pow((skr - *refs.skr_high_bps) / *refs.skr_high_bps, 2);
      }
      return r;
    };

    // Coarse grid, then local refinement; the surface is smooth and the box
    // is small, so this is robust and deterministic.
    double beta_lo = 0.5, beta_hi = 1.0, vel_lo = 0.0, vel_hi = 0.6;
    double best_beta = cfg_template.beta, best_vel = cfg_template.v_el;
    double best = residual(best_beta, best_vel);
    for (int round = 0; round < 4; ++round) {
      const int nb = 41, nv = 41;
      for (int i = 0; i < nb; ++i) {
        for (int j = 0; j < nv; ++j) {
          const double b = beta_lo + i * (beta_hi - beta_lo) / (nb - 1);
          const double v = vel_lo + j * (vel_hi - vel_lo) / (nv - 1);
          const double r = residual(b, v);
          if (r < best) {
            best = r;
            best_beta = b;
            best_vel = v;
          }
        }
      }
      const double db = (beta_hi - beta_lo) / 8.0, dv = (vel_hi - vel_lo) / 8.0;
      beta_lo = std::max(0.5, best_beta - db);
      beta_hi = std::min(1.0, best_beta + db);
      vel_lo = std::max(0.0, best_vel - dv);
      vel_hi = std::min(0.6, best_vel + dv);
    }
    if (std::sqrt(best) > 0.5)
      throw FitDiverged("calibration: key-rate references cannot be met within the (beta, v_el) box");
    out.beta = best_beta;
    out.v_el = best_vel;

    params.beta = out.beta;
    const CalibrationSet cal = make_calibration(eta, out.v_el);
    out.skr_low_bps =
        secret_key_rate(cfg_template.modulation_variance, t_hat, xi_a_low, cal, params).skr_bps;
    out.skr_high_bps =
        secret_key_rate(cfg_template.modulation_variance, t_hat, xi_a_high, cal, params).skr_bps;
  }

  return out;
}

std::string CalibrationOutcome::report(const ReferencePoints& refs) const {
  std::ostringstream oss;
  oss << "calibration report\n";
  oss << "  fitted ase.psd_at_source_w_hz = " << ase.psd_at_source_w_hz << "\n";
  oss << "  carried ase.notch_db = " << ase.notch_suppression_db
      << ", ase.pedestal_sigma_hz = " << ase.pedestal_sigma_hz
      << ", ase.dd_conversion = " << ase.dd_conversion << ", bpf.order = " << bpf_order << "\n";
  oss << "  fitted beta = " << beta << ", v_el = " << v_el << "\n";
  oss << "  baseline xi_B = " << baseline_xi_b << " SNU, T_hat = " << baseline_t_hat << "\n";
  oss << "  filterless xi_B at max power = " << no_bpf_xi_b << " (model), ratio = "
      << no_bpf_xi_b / baseline_xi_b;
  if (refs.no_bpf_ratio) oss << " vs reference " << *refs.no_bpf_ratio;
  oss << "\n";
  oss << "  held-out 1-nm increase at max power = " << 100.0 * predicted_one_nm_increase()
      << " %";
  if (refs.one_nm_ratio) oss << " vs reference " << 100.0 * (*refs.one_nm_ratio - 1.0) << " %";
  oss << "\n";
  oss << "  held-out 1-nm vs filterless = " << 100.0 * predicted_one_nm_vs_no_bpf()
      << " % lower";
  if (refs.one_nm_vs_no_bpf) oss << " vs reference " << 100.0 * *refs.one_nm_vs_no_bpf << " %";
  oss << "\n";
  if (refs.skr_low_bps)
    oss << "  SKR low  = " << skr_low_bps << " bit/s vs reference " << *refs.skr_low_bps << "\n";
  if (refs.skr_high_bps)
    oss << "  SKR high = " << skr_high_bps << " bit/s vs reference " << *refs.skr_high_bps
        << "\n";
  return oss.str();
}

} // namespace cvqkd
