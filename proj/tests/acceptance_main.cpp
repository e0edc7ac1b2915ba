// Acceptance suite: end-to-end checks of the coexistence study at desk
// scale. One PASS/FAIL line per criterion; exit code 0 only if all pass.
//
// Statistical design: criteria on the crosstalk deltas (2-4) calibrate the
// model once against the filterless anchor using long baseline runs, then
// validate held-out predictions both analytically and against simulated
// sweeps at the 30x1e5 block budget; sampling noise at that budget is
// reported alongside each check.

#include "cvqkd/calibration_fit.hpp"
#include "cvqkd/report.hpp"
#include "cvqkd/rng.hpp"
#include "cvqkd/scenario.hpp"
#include "gaussian_oracle.hpp"

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

using namespace cvqkd;

namespace {

constexpr std::uint64_t kSeed = 811;

int g_failures = 0;

void report(int criterion, const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s  [%d] %-24s %s\n", pass ? "PASS" : "FAIL", criterion, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

ScenarioConfig production_config() {
  ScenarioConfig cfg;
  cfg.plan = WdmPlanKind::FiveNmFiber;
  cfg.seed = kSeed;
  return cfg;
}

struct WeightedFit {
  double slope = 0.0;
  double slope_se = 0.0;
  double intercept = 0.0;
};

/// Weighted least squares of y vs x with per-point standard errors.
WeightedFit weighted_line(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& se) {
  double sw = 0.0, swx = 0.0, swy = 0.0, swxx = 0.0, swxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = 1.0 / (se[i] * se[i]);
    sw += w;
    swx += w * x[i];
    swy += w * y[i];
    swxx += w * x[i] * x[i];
    swxy += w * x[i] * y[i];
  }
  WeightedFit f;
  const double denom = sw * swxx - swx * swx;
  f.slope = (sw * swxy - swx * swy) / denom;
  f.intercept = (swxx * swy - swx * swxy) / denom;
  f.slope_se = std::sqrt(sw / denom);
  return f;
}

const std::vector<double>& sweep_powers() {
  static const std::vector<double> powers = {-21.37, -16.0, -11.0, -6.0, -1.0, 4.0, 8.46};
  return powers;
}

struct SweepData {
  std::vector<SweepRow> rows;
  std::vector<double> p_mw, xi, se;
};

SweepData run_sweep(ScenarioConfig cfg) {
  cfg.blocks = 30;
  cfg.block_length = 100000;
  SweepData data;
  data.rows = sweep(cfg, sweep_powers());
  for (const auto& r : data.rows) {
    data.p_mw.push_back(dbm_to_watt(r.total_launch_power_dbm) * 1e3);
    data.xi.push_back(r.xi_b_mean);
    data.se.push_back(r.xi_b_std / std::sqrt(30.0));
  }
  return data;
}

// --- criterion 5: security math ---------------------------------------------

void criterion5() {
  bool grid_ok = true;
  double worst = 0.0;
  Rng rng(505);
  for (int i = 0; i < 100; ++i) {
    const double va = 1.0 + 19.0 * rng.uniform();
    const double t = 0.05 + 0.95 * rng.uniform();
    const double xi = 0.3 * rng.uniform();
    const double eta = 0.2 + 0.8 * rng.uniform();
    const double v_el = 0.5 * rng.uniform();
    const double diff =
        std::abs(holevo_bound(va, t, xi, eta, v_el) - oracle::holevo_bound(va, t, xi, eta, v_el));
    worst = std::max(worst, diff);
    if (diff > 1e-6) grid_ok = false;
  }

  bool pure_ok = true;
  for (const double eta : {1.0, 0.67, 0.35})
    for (const double v_el : {0.0, 0.1, 0.5})
      pure_ok = pure_ok && std::abs(holevo_bound(8.0, 1.0, 0.0, eta, v_el)) < 1e-12;

  const double ideal = std::abs(mutual_information(8.0, 1.0, 0.0, 1.0, 0.0) - std::log2(5.0));
  report(5, "security-math-oracle", grid_ok && pure_ok && ideal < 1e-12,
         fmt("worst |closed-oracle| = %.2e bits (tol 1e-6), chi(T=1,xi=0) %s, "
             "|I_ideal - log2 5| = %.1e (tol 1e-12)",
             worst, pure_ok ? "= 0 within 1e-12" : "NONZERO", ideal));
}

// --- criterion 6: estimator calibration -------------------------------------

void criterion6() {
  const double eta = 0.35, v_el = 0.1, va = 8.0;
  const CalibrationSet cal = make_calibration(eta, v_el);
  const double t_grid[3] = {0.3, 0.5546, 0.8};
  const double xi_grid[3] = {0.01, 0.04, 0.1};

  int trials = 0, hits = 0;
  for (int rep = 0; rep < 12 && trials < 100; ++rep) {
    for (int a = 0; a < 3 && trials < 100; ++a) {
      for (int b = 0; b < 3 && trials < 100; ++b) {
        const double t = t_grid[a], xi = xi_grid[b];
        Rng rng(derive_seed(kSeed, 600 + trials));
        const int n_blocks = 16;
        std::vector<RecoveredBlock> blocks(n_blocks);
        const double gain = std::sqrt(eta * t / 2.0);
        const double nv = 1.0 + v_el + eta * t * xi / 2.0;
        for (auto& block : blocks) {
          const Eigen::Index n = 10000;
          block.block_length = n;
          block.tx_data_symbols = rng.complex_gaussian_array(n, va);
          block.rx_data_symbols.resize(n);
          for (Eigen::Index i = 0; i < n; ++i)
            block.rx_data_symbols[i] = gain * block.tx_data_symbols[i] + rng.complex_gaussian(nv);
        }
        const ChannelEstimate est = estimate_parameters(blocks, va, cal);

        // Standard errors from the per-block scatter of each aggregate,
        // which keeps the T_hat / xi_A correlation in the xi_A error.
        double mean_t = 0.0, mean_xa = 0.0;
        std::vector<double> xa(est.per_block.size());
        for (std::size_t k = 0; k < est.per_block.size(); ++k) {
          xa[k] = est.per_block[k].xi_B_hat / (eta * est.per_block[k].T_hat);
          mean_t += est.per_block[k].T_hat;
          mean_xa += xa[k];
        }
        mean_t /= est.per_block.size();
        mean_xa /= est.per_block.size();
        double ss_t = 0.0, ss_xa = 0.0;
        for (std::size_t k = 0; k < est.per_block.size(); ++k) {
          ss_t += std::pow(est.per_block[k].T_hat - mean_t, 2);
          ss_xa += std::pow(xa[k] - mean_xa, 2);
        }
        const double se_t = std::sqrt(ss_t / (n_blocks - 1) / n_blocks);
        const double se_xi_a = std::sqrt(ss_xa / (n_blocks - 1) / n_blocks);

        const bool ok = std::abs(est.T_hat - t) < 3.0 * se_t &&
                        std::abs(mean_xa - xi) < 3.0 * se_xi_a;
        ++trials;
        if (ok) ++hits;
      }
    }
  }
  report(6, "estimator-calibration", hits >= 95,
         fmt("known (T, xi_A) recovered within 3 SE in %d/%d trials (need >= 95)", hits, trials));
}

// --- criterion 7: DSP loopback ----------------------------------------------

struct LoopbackResult {
  double corr = 0.0;
  double cfo_err_pos = 0.0, cfo_err_neg = 0.0;
  double phase_residual = 0.0, mean_phase = 0.0;
};

LoopbackResult loopback_checks() {
  LoopbackResult res;
  const auto constellation = build_constellation(256, shaping_rate_for_entropy(256, 6.0), 8.0);
  const auto spec = make_frame_spec(constellation, 250e6, 0.5, 8, 0.2, 20, 15.0);
  const CalibrationSet ideal = make_calibration(1.0, 0.0, 1.0);
  DspConfig dsp;

  // (a) zero-impairment correlation vs the heterodyne prediction.
  {
    double sx = 0.0, sy = 0.0;
    Complex sxy{0.0, 0.0};
    LaserSpec clean{0.0, 0.0};
    for (int b = 0; b < 8; ++b) {
      const auto frame =
          generate_frame(constellation, spec, 250000, derive_seed(kSeed, 700 + b));
      ComplexArray wave = pulse_shape(frame);
      wave = propagate(wave, 1.0, clean, 0.0, 2e9, derive_seed(kSeed, 710 + b));
      const RxCapture cap = detect(wave, 2e9, ideal, derive_seed(kSeed, 720 + b));
      const RecoveredBlock block = process_block(cap, frame, dsp);
      for (Eigen::Index i = 0; i < block.tx_data_symbols.size(); ++i) {
        sx += std::norm(block.tx_data_symbols[i]);
        sy += std::norm(block.rx_data_symbols[i]);
        sxy += block.rx_data_symbols[i] * std::conj(block.tx_data_symbols[i]);
      }
    }
    res.corr = std::abs(sxy) / std::sqrt(sx * sy);
  }

  // (b) injected +/-5 MHz offsets at the quantum operating point.
  {
    const CalibrationSet cal = make_calibration(0.35, 0.1, 1.0);
    for (const double f : {5e6, -5e6}) {
      LaserSpec laser{0.0, f};
      const auto frame = generate_frame(constellation, spec, 250000, derive_seed(kSeed, 730));
      ComplexArray wave = pulse_shape(frame);
      wave = propagate(wave, 0.5546, laser, 0.0, 2e9, derive_seed(kSeed, 731));
      const RxCapture cap = detect(wave, 2e9, cal, derive_seed(kSeed, 732));
      const double est = estimate_cfo(cap, frame, dsp);
      (f > 0 ? res.cfo_err_pos : res.cfo_err_neg) = std::abs(est - f);
    }
  }

  // (c) constant 0.3 rad rotation removed end to end.
  {
    LaserSpec clean{0.0, 0.0};
    const Complex rot{std::cos(0.3), std::sin(0.3)};
    Complex acc{0.0, 0.0};
    Complex mean_rot{0.0, 0.0};
    for (int b = 0; b < 4; ++b) {
      const auto frame =
          generate_frame(constellation, spec, 250000, derive_seed(kSeed, 740 + b));
      ComplexArray wave = pulse_shape(frame) * rot;
      wave = propagate(wave, 1.0, clean, 0.0, 2e9, derive_seed(kSeed, 750 + b));
      const RxCapture cap = detect(wave, 2e9, ideal, derive_seed(kSeed, 760 + b));
      const RecoveredBlock block = process_block(cap, frame, dsp);
      mean_rot += Complex{std::cos(block.mean_phase_error_rad),
                          std::sin(block.mean_phase_error_rad)};
      for (Eigen::Index i = 0; i < block.tx_data_symbols.size(); ++i)
        acc += block.rx_data_symbols[i] * std::conj(block.tx_data_symbols[i]);
    }
    res.phase_residual = std::abs(std::arg(acc));
    res.mean_phase = std::arg(mean_rot);
  }
  return res;
}

void criterion7() {
  const LoopbackResult res = loopback_checks();
  const double predicted = std::sqrt(8.0 / 10.0);
  const bool corr_ok = std::abs(res.corr - predicted) < 0.01;
  const bool cfo_ok = res.cfo_err_pos < 2e3 && res.cfo_err_neg < 2e3;
  const bool phase_ok = res.phase_residual < 1e-3 && std::abs(res.mean_phase - 0.3) < 0.01;
  report(7, "dsp-loopback", corr_ok && cfo_ok && phase_ok,
         fmt("corr %.4f vs %.4f (tol 0.01); CFO err +%.0f/-%.0f Hz (tol 2e3); "
             "0.3 rad residual %.2e (tol 1e-3)",
             res.corr, predicted, res.cfo_err_pos, res.cfo_err_neg, res.phase_residual));
}

// --- block-independence invariant (supporting check) ------------------------

void block_independence() {
  ScenarioConfig cfg = production_config();
  cfg.plan = WdmPlanKind::FiveNmFso;
  cfg.blocks = 1200; // |rho| < 0.1 is a ~3.4 sigma statement at this count
  cfg.block_length = 2500;
  cfg.dsp.cfo_fft_size = 1 << 17;
  cfg.seed = derive_seed(kSeed, 801);
  const ScenarioResult result = run_scenario(cfg);

  double mean = 0.0;
  for (const auto& b : result.estimate.per_block) mean += b.xi_B_hat;
  mean /= result.estimate.per_block.size();
  double c0 = 0.0, c1 = 0.0;
  const auto& blocks = result.estimate.per_block;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    c0 += std::pow(blocks[i].xi_B_hat - mean, 2);
    if (i + 1 < blocks.size())
      c1 += (blocks[i].xi_B_hat - mean) * (blocks[i + 1].xi_B_hat - mean);
  }
  const double rho1 = c1 / c0;
  report(0, "block-independence", std::abs(rho1) < 0.1,
         fmt("lag-1 autocorrelation of per-block xi over %zu blocks = %+.3f (tol 0.1)",
             blocks.size(), rho1));
}

void desk_scale_budget() {
  ScenarioConfig cfg = production_config();
  cfg.blocks = 30;
  cfg.block_length = 100000;
  cfg.seed = derive_seed(kSeed, 802);
  const auto t0 = std::chrono::steady_clock::now();
  run_scenario(cfg);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(0, "desk-scale-budget", seconds < 60.0,
         fmt("30 x 1e5-symbol blocks in %.1f s (< 60 s)", seconds));
}

} // namespace

int main() {
  const auto t_start = std::chrono::steady_clock::now();
  std::printf("acceptance suite, seed %llu\n", static_cast<unsigned long long>(kSeed));

  criterion5();
  criterion6();
  criterion7();
  block_independence();
  desk_scale_budget();

  // --- calibration for criteria 2-4 -----------------------------------------
  ScenarioConfig cal_cfg = production_config();
  cal_cfg.blocks = 300;
  cal_cfg.block_length = 200000;

  ReferencePoints refs;
  refs.power_low_dbm = -21.37;
  refs.power_high_dbm = 8.46;
  refs.no_bpf_ratio = 3.75; // 275% increase
  refs.skr_low_bps = 4e6;
  refs.skr_high_bps = 2.9e6;
  refs.one_nm_ratio = 1.83; // held out
  refs.one_nm_vs_no_bpf = 0.51;

  CalibrationOutcome fit;
  bool calibrated = false;
  std::string cal_error;
  try {
    fit = calibrate_to_references(cal_cfg, refs);
    calibrated = true;
    std::printf("%s", fit.report(refs).c_str());
  } catch (const std::exception& e) {
    cal_error = e.what();
  }

  ScenarioConfig fitted_cfg = production_config();
  if (calibrated) {
    fitted_cfg.ase = fit.ase;
    fitted_cfg.beta = fit.beta;
  }

  // --- criterion 1: flat-noise FSO baseline ---------------------------------
  {
    const auto t0 = std::chrono::steady_clock::now();
    ScenarioConfig cfg = fitted_cfg;
    cfg.plan = WdmPlanKind::FiveNmFso;
    cfg.seed = kSeed + 100;
    const SweepData data = run_sweep(cfg);
    const double minutes =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;

    const WeightedFit line = weighted_line(data.p_mw, data.xi, data.se);
    const double lo = line.slope - 1.96 * line.slope_se;
    const double hi = line.slope + 1.96 * line.slope_se;
    report(1, "fso-flat-baseline", lo <= 0.0 && 0.0 <= hi && minutes < 5.0,
           fmt("slope %.2e +- %.2e SNU/mW, 95%% CI [%.2e, %.2e] contains 0; %.1f min (< 5)",
               line.slope, line.slope_se, lo, hi, minutes));
  }

  if (!calibrated) {
    report(2, "no-bpf-anchor", false, "calibration failed: " + cal_error);
    report(3, "one-nm-prediction", false, "calibration failed");
    report(4, "skr-endpoints", false, "calibration failed");
  } else {
    // --- criterion 2: filterless anchor + linear growth ----------------------
    {
      const double ratio = fit.no_bpf_xi_b / fit.baseline_xi_b;
      const bool anchor_ok = std::abs(ratio - 3.75) < 0.15 * 3.75;

      ScenarioConfig cfg = fitted_cfg;
      cfg.plan = WdmPlanKind::FiveNmFiber;
      cfg.bpf_enabled = false;
      cfg.seed = kSeed + 200;
      const SweepData data = run_sweep(cfg);
      const WeightedFit line = weighted_line(data.p_mw, data.xi, data.se);
      const bool grows = line.slope > 1.96 * line.slope_se;

      // Simulated endpoint vs the fitted model value.
      const double sim_max = data.xi.back();
      const double model_max = fit.no_bpf_xi_b;
      const bool endpoint_ok = std::abs(sim_max - model_max) < 3.0 * data.se.back();

      report(2, "no-bpf-anchor", anchor_ok && grows && endpoint_ok,
             fmt("model ratio %.3f vs 3.75 (tol 15%%); sweep slope %.2e +- %.2e SNU/mW "
                 "(>0 at 95%%); simulated max %.5f vs model %.5f +- %.5f",
                 ratio, line.slope, line.slope_se, sim_max, model_max, 3.0 * data.se.back()));
    }

    // --- criterion 3: 1-nm held-out prediction -------------------------------
    {
      const double inc = fit.predicted_one_nm_increase();
      const bool inc_ok = std::abs(inc - 0.83) < 0.25;
      const double vs_nb = fit.predicted_one_nm_vs_no_bpf();
      const bool vs_ok = std::abs(vs_nb - 0.51) < 0.15;

      // Simulated consistency on both placements at the desk-scale budget.
      bool sim_ok = true;
      std::string sim_detail;
      for (const auto plan : {WdmPlanKind::OneNmUpper, WdmPlanKind::OneNmLower}) {
        ScenarioConfig cfg = fitted_cfg;
        cfg.plan = plan;
        cfg.seed = kSeed + (plan == WdmPlanKind::OneNmUpper ? 300 : 400);
        const SweepData data = run_sweep(cfg);
        const double rise = data.xi.back() - data.xi.front();
        const double predicted_rise = fit.one_nm_xi_b_high - fit.one_nm_xi_b_low;
        const double se = std::sqrt(std::pow(data.se.back(), 2) + std::pow(data.se.front(), 2));
        if (std::abs(rise - predicted_rise) > 3.0 * se) sim_ok = false;
        sim_detail += fmt("%s rise %.5f vs %.5f +- %.5f; ", to_string(plan).c_str(), rise,
                          predicted_rise, 3.0 * se);
      }

      report(3, "one-nm-prediction", inc_ok && vs_ok && sim_ok,
             fmt("held-out increase %.1f%% vs 83%% (tol 25 pp); %.1f%% below filterless vs "
                 "51%% (tol 15 pp); %s",
                 100.0 * inc, 100.0 * vs_nb, sim_detail.c_str()));
    }

    // --- criterion 4: SKR endpoints ------------------------------------------
    {
      const bool low_ok = std::abs(fit.skr_low_bps - 4e6) < 0.2 * 4e6;
      const bool high_ok = std::abs(fit.skr_high_bps - 2.9e6) < 0.2 * 2.9e6;
      const double drop = (fit.skr_low_bps - fit.skr_high_bps) / fit.skr_low_bps;
      const bool drop_ok = std::abs(drop - 0.275) < 0.10;
      report(4, "skr-endpoints", low_ok && high_ok && drop_ok,
             fmt("SKR %.3g / %.3g bit/s vs 4e6 / 2.9e6 (tol 20%%); drop %.1f%% vs 27.5%% "
                 "(tol 10 pp); beta %.3f, v_el %.3f",
                 fit.skr_low_bps, fit.skr_high_bps, 100.0 * drop, fit.beta, fit.v_el));
    }
  }

  const double total_min =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count() / 60.0;
  std::printf("%d criterion failure(s); total runtime %.1f min\n", g_failures, total_min);
  return g_failures == 0 ? 0 : 1;
}
