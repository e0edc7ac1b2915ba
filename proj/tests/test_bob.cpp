#include "cvqkd/bob.hpp"

#include "cvqkd/channel.hpp"
#include "cvqkd/errors.hpp"
#include "cvqkd/rng.hpp"
#include "cvqkd/rrc.hpp"

#include <doctest.h>

#include <cmath>

using namespace cvqkd;

namespace {

ConstellationSpec test_constellation() {
  return build_constellation(256, shaping_rate_for_entropy(256, 6.0), 8.0);
}

FrameSpec test_spec(double boost_db = 15.0) {
  return make_frame_spec(test_constellation(), 250e6, 0.5, 8, 0.2, 20, boost_db);
}

DspConfig small_fft_cfg() {
  DspConfig cfg;
  cfg.cfo_fft_size = 1 << 18;
  return cfg;
}

/// Capture whose raw units equal SNU (shot variance 1), without detection.
RxCapture raw_capture(const ComplexArray& samples, double eta = 1.0, double v_el = 0.0) {
  RxCapture cap;
  cap.samples = samples;
  cap.sample_rate = 2e9;
  cap.cal = make_calibration(eta, v_el, 1.0);
  return cap;
}

} // namespace

TEST_CASE("detect: vacuum input gives unit variance in SNU") {
  const Eigen::Index n = 1000000;
  const CalibrationSet cal = make_calibration(1.0, 0.0, 0.003);
  const RxCapture cap = detect(ComplexArray::Zero(n), 2e9, cal, 11);
  const double v = quadrature_variance(to_snu(cap.samples, cal));
  const double tol = 3.0 * std::sqrt(2.0 / (2.0 * n));
  CHECK(std::abs(v - 1.0) < tol);
}

TEST_CASE("detect: dark capture variance is 1 + v_el") {
  const Eigen::Index n = 1000000;
  const CalibrationSet cal = make_calibration(0.35, 0.1, 0.003);
  const RxCapture cap = detect(ComplexArray::Zero(n), 2e9, cal, 12);
  const double v = quadrature_variance(to_snu(cap.samples, cal));
  const double tol = 3.0 * 1.1 * std::sqrt(2.0 / (2.0 * n));
  CHECK(std::abs(v - 1.1) < tol);
}

TEST_CASE("detect: strong tone attenuated by eta") {
  const Eigen::Index n = 200000;
  const double amplitude = 20.0;
  const CalibrationSet cal = make_calibration(0.35, 0.1, 0.0025);
  const RxCapture cap =
      detect(ComplexArray::Constant(n, Complex{amplitude, 0.0}), 2e9, cal, 13);
  const Complex mean = to_snu(cap.samples, cal).mean();
  // Doubling the measured tone power undoes the hybrid's 3-dB split; what is
  // left is the efficiency.
  const double restored = 2.0 * std::norm(mean);
  CHECK(restored / (amplitude * amplitude) == doctest::Approx(0.35).epsilon(0.005));
}

namespace {

struct Loopback {
  SymbolFrame frame;
  RxCapture capture;
};

Loopback make_loopback(Eigen::Index n_symbols, double transmittance, const LaserSpec& laser,
                       const CalibrationSet& cal, std::uint64_t seed, double boost_db = 15.0) {
  Loopback lb;
  lb.frame = generate_frame(test_constellation(), test_spec(boost_db), n_symbols, seed);
  ComplexArray wave = pulse_shape(lb.frame);
  wave = propagate(wave, transmittance, laser, 0.0, 2e9, seed + 1);
  lb.capture = detect(wave, 2e9, cal, seed + 2);
  return lb;
}

} // namespace

TEST_CASE("cfo: loopback estimates within tolerance") {
  const CalibrationSet cal = make_calibration(0.35, 0.1, 0.002);
  DspConfig cfg; // full 2^20 FFT for the stated tolerance

  LaserSpec laser;
  laser.combined_linewidth_hz = 0.0;

  SUBCASE("zero offset") {
    laser.frequency_offset_hz = 0.0;
    const Loopback lb = make_loopback(1 << 16, 0.4, laser, cal, 100);
    CHECK(std::abs(estimate_cfo(lb.capture, lb.frame, cfg)) < 500.0);
  }
  SUBCASE("5 MHz within 2 kHz") {
    laser.frequency_offset_hz = 5e6;
    const Loopback lb = make_loopback(1 << 16, 0.4, laser, cal, 101);
    CHECK(std::abs(estimate_cfo(lb.capture, lb.frame, cfg) - 5e6) < 2e3);
  }
  SUBCASE("-12.5 MHz keeps its sign") {
    laser.frequency_offset_hz = -12.5e6;
    const Loopback lb = make_loopback(1 << 16, 0.4, laser, cal, 102);
    const double est = estimate_cfo(lb.capture, lb.frame, cfg);
    CHECK(est < 0.0);
    CHECK(std::abs(est + 12.5e6) < 2e3);
  }
}

TEST_CASE("cfo: two peaks within 1 dB raise AmbiguousPeak") {
  const SymbolFrame frame = generate_frame(test_constellation(), test_spec(), 1 << 14, 200);
  const ComplexArray wave = pulse_shape(frame);
  LaserSpec l1, l2;
  l1.frequency_offset_hz = 4e6;
  l2.frequency_offset_hz = -6e6;
  const ComplexArray two_tones =
      propagate(wave, 1.0, l1, 0.0, 2e9, 1) + propagate(wave, 1.0, l2, 0.0, 2e9, 2);
  CHECK_THROWS_AS(estimate_cfo(raw_capture(two_tones), frame, small_fft_cfg()), AmbiguousPeak);
}

TEST_CASE("cfo: compensate is the exact inverse rotation") {
  Rng rng(17);
  const ComplexArray samples = rng.complex_gaussian_array(4096, 1.0);
  const RxCapture cap = raw_capture(samples);
  const RxCapture round = compensate_cfo(compensate_cfo(cap, 3.1e6), -3.1e6);
  CHECK((round.samples - samples).abs().maxCoeff() < 1e-12);

  const RxCapture same = compensate_cfo(cap, 0.0);
  CHECK((same.samples - samples).abs().maxCoeff() == 0.0);
}

TEST_CASE("matched filter: noiseless loopback recovers symbols to 1e-3") {
  const SymbolFrame frame = generate_frame(test_constellation(), test_spec(), 8192, 300);
  const ComplexArray wave = pulse_shape(frame);
  const ComplexArray symbols = matched_filter_downsample(raw_capture(wave), frame);

  double err = 0.0, ref = 0.0;
  for (Eigen::Index i = 0; i < frame.size(); ++i) {
    err += std::norm(symbols[i] - frame.tx_symbols[i]);
    ref += std::norm(frame.tx_symbols[i]);
  }
  CHECK(std::sqrt(err / ref) < 1e-3);
}

TEST_CASE("matched filter: 4-sample shift is absorbed by the timing search") {
  const SymbolFrame frame = generate_frame(test_constellation(), test_spec(), 8192, 301);
  const ComplexArray wave = pulse_shape(frame);
  const ComplexArray base = matched_filter_downsample(raw_capture(wave), frame);

  ComplexArray shifted = ComplexArray::Zero(wave.size() + 4);
  shifted.tail(wave.size()) = wave;
  const ComplexArray out = matched_filter_downsample(raw_capture(shifted), frame);
  CHECK((out - base).abs().maxCoeff() < 1e-12);
}

TEST_CASE("matched filter: zero input raises TimingNotFound") {
  const SymbolFrame frame = generate_frame(test_constellation(), test_spec(), 4096, 302);
  const ComplexArray zeros = ComplexArray::Zero(4096 * 8 + 321);
  CHECK_THROWS_AS(matched_filter_downsample(raw_capture(zeros), frame), TimingNotFound);
}

TEST_CASE("equalize: identity channel passes through") {
  const SymbolFrame frame = generate_frame(test_constellation(), test_spec(), 8192, 400);
  DspConfig cfg;

  // Noiseless identity: pilot error is zero, taps never move.
  const ComplexArray out = equalize(frame.tx_symbols, frame, cfg);
  CHECK((out - frame.tx_symbols).abs().maxCoeff() < 1e-12);

  // Step 0 is a hard bypass.
  cfg.equalizer_step = 0.0;
  Rng rng(41);
  ComplexArray noisy = frame.tx_symbols + rng.complex_gaussian_array(frame.size(), 1.0);
  const ComplexArray same = equalize(noisy, frame, cfg);
  CHECK((same - noisy).abs().maxCoeff() == 0.0);
}

TEST_CASE("equalize: two-tap ISI channel improves data MSE by 5 dB") {
  const SymbolFrame frame = generate_frame(test_constellation(), test_spec(), 16384, 401);
  Rng rng(42);
  ComplexArray received(frame.size());
  for (Eigen::Index i = 0; i < frame.size(); ++i) {
    const Complex prev = i > 0 ? frame.tx_symbols[i - 1] : Complex{0.0, 0.0};
    received[i] = frame.tx_symbols[i] + 0.3 * prev + rng.complex_gaussian(0.01);
  }

  DspConfig cfg;
  cfg.equalizer_step = 0.1; // fast adaptation for the short test block
  const ComplexArray out = equalize(received, frame, cfg);

  double mse_before = 0.0, mse_after = 0.0;
  Eigen::Index n_data = 0;
  for (Eigen::Index i = 0; i < frame.size(); ++i) {
    if (frame.pilot_mask[i]) continue;
    mse_before += std::norm(received[i] - frame.tx_symbols[i]);
    mse_after += std::norm(out[i] - frame.tx_symbols[i]);
    ++n_data;
  }
  CHECK(mse_before / mse_after > std::pow(10.0, 0.5)); // >= 5 dB
}

TEST_CASE("equalize: pilot error trailing average settles") {
  const SymbolFrame frame = generate_frame(test_constellation(), test_spec(), 16384, 403);
  Rng rng(44);
  ComplexArray received(frame.size());
  for (Eigen::Index i = 0; i < frame.size(); ++i) {
    const Complex prev = i > 0 ? frame.tx_symbols[i - 1] : Complex{0.0, 0.0};
    received[i] = frame.tx_symbols[i] + 0.25 * prev + rng.complex_gaussian(0.02);
  }
  DspConfig cfg;
  cfg.equalizer_step = 0.1;
  EqualizerDiagnostics diag;
  equalize(received, frame, cfg, &diag);
  REQUIRE(diag.error_trailing_avg.size() >= 4);
  // Converged: the trailing average never rises appreciably after the first
  // chunks, and the tail sits well below the start.
  const double start = diag.error_trailing_avg.front();
  const double tail = diag.error_trailing_avg.back();
  CHECK(tail < 0.5 * start);
  for (std::size_t i = 2; i + 1 < diag.error_trailing_avg.size(); ++i)
    CHECK(diag.error_trailing_avg[i + 1] < 1.2 * diag.error_trailing_avg[i]);
}

TEST_CASE("equalize: runaway step raises Diverged") {
  const SymbolFrame frame = generate_frame(test_constellation(), test_spec(), 4096, 402);
  Rng rng(43);
  const ComplexArray noisy =
      frame.tx_symbols + rng.complex_gaussian_array(frame.size(), 0.5);
  DspConfig cfg;
  cfg.equalizer_step = 50.0;
  CHECK_THROWS_AS(equalize(noisy, frame, cfg), Diverged);
}

TEST_CASE("phase recover: clean input and constant offsets") {
  const SymbolFrame frame = generate_frame(test_constellation(), test_spec(), 8192, 500);
  DspConfig cfg;

  SUBCASE("zero phase error") {
    const RecoveredBlock block = phase_recover(frame.tx_symbols, frame, cfg);
    CHECK(std::abs(block.mean_phase_error_rad) < 1e-12);
    CHECK((block.rx_data_symbols - block.tx_data_symbols).abs().maxCoeff() < 1e-12);
  }
  SUBCASE("constant 0.3 rad removed below 1e-3") {
    const Complex rot{std::cos(0.3), std::sin(0.3)};
    const ComplexArray rotated = frame.tx_symbols * rot;
    const RecoveredBlock block = phase_recover(rotated, frame, cfg);
    CHECK(block.mean_phase_error_rad == doctest::Approx(0.3).epsilon(1e-9));
    Complex acc{0.0, 0.0};
    for (Eigen::Index i = 0; i < block.rx_data_symbols.size(); ++i)
      acc += block.rx_data_symbols[i] * std::conj(block.tx_data_symbols[i]);
    CHECK(std::abs(std::arg(acc)) < 1e-3);
  }
}

TEST_CASE("phase recover: Wiener phase residual stays under the drift bound") {
  // 200 kHz combined linewidth at 250 MBaud, alternating pilots, window 32.
  const Eigen::Index n = 1 << 16;
  const SymbolFrame frame = generate_frame(test_constellation(), test_spec(0.0), n, 501);
  const double sigma2_step = 2.0 * M_PI * 200e3 / 250e6; // per symbol
  Rng rng(502);
  ComplexArray noisy(n);
  RealArray phi(n);
  double p = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    p += std::sqrt(sigma2_step) * rng.gaussian();
    phi[i] = p;
    noisy[i] = frame.tx_symbols[i] * Complex{std::cos(p), std::sin(p)} +
               rng.complex_gaussian(1.0); // vacuum-level additive noise
  }

  DspConfig cfg;
  cfg.phase_pilot_window = 32;
  const RecoveredBlock block = phase_recover(noisy, frame, cfg);

  // Residual rotation of recovered vs transmitted symbols. Additive noise
  // dominates individual symbol angles, so average over windows of 64 data
  // symbols before taking the angle.
  double var = 0.0;
  Eigen::Index windows = 0;
  Complex acc{0.0, 0.0};
  Eigen::Index in_window = 0;
  for (Eigen::Index j = 0; j < block.rx_data_symbols.size(); ++j) {
    acc += block.rx_data_symbols[j] * std::conj(block.tx_data_symbols[j]);
    if (++in_window == 64) {
      var += std::pow(std::arg(acc), 2);
      ++windows;
      acc = Complex{0.0, 0.0};
      in_window = 0;
    }
  }
  var /= static_cast<double>(windows);

  const double pilot_rate = 0.5 * 250e6;
  const double bound = 2.0 * M_PI * 200e3 * cfg.phase_pilot_window / pilot_rate;
  CHECK(var < 1.5 * bound);
}

TEST_CASE("pipeline: ideal loopback correlation matches the heterodyne prediction") {
  const CalibrationSet cal = make_calibration(1.0, 0.0, 1.0);
  LaserSpec clean;
  clean.combined_linewidth_hz = 0.0;
  const Loopback lb = make_loopback(1 << 16, 1.0, clean, cal, 600);
  DspConfig cfg;
  const RecoveredBlock block = process_block(lb.capture, lb.frame, cfg);

  // corr = sqrt(V_A / (V_A + 2)) for V_A = 8: the heterodyne vacuum unit is
  // the only impairment left.
  double sx = 0.0, sy = 0.0;
  Complex sxy{0.0, 0.0};
  for (Eigen::Index i = 0; i < block.tx_data_symbols.size(); ++i) {
    sx += std::norm(block.tx_data_symbols[i]);
    sy += std::norm(block.rx_data_symbols[i]);
    sxy += block.rx_data_symbols[i] * std::conj(block.tx_data_symbols[i]);
  }
  const double corr = std::abs(sxy) / std::sqrt(sx * sy);
  CHECK(std::abs(corr - std::sqrt(8.0 / 10.0)) < 0.01);
}
