#include "cvqkd/snu.hpp"

#include "cvqkd/errors.hpp"

namespace cvqkd {

namespace {
constexpr Eigen::Index kMinCalibrationSamples = 10000;
}

void CalibrationSet::validate() const {
  if (!(shot_noise_variance > 0.0))
    throw ConfigError("calibration: shot_noise_variance must be > 0");
  if (electronic_noise_variance < 0.0)
    throw ConfigError("calibration: electronic_noise_variance must be >= 0");
  if (v_el < 0.0) throw ConfigError("calibration: v_el must be >= 0");
  if (!(eta > 0.0) || eta > 1.0)
    throw ConfigError("calibration: eta must be in (0, 1]");
}

CalibrationSet make_calibration(double eta, double v_el, double shot_noise_raw) {
  CalibrationSet cal;
  cal.shot_noise_variance = shot_noise_raw;
  cal.electronic_noise_variance = v_el * shot_noise_raw;
  cal.v_el = v_el;
  cal.eta = eta;
  cal.validate();
  return cal;
}

double quadrature_variance(const ComplexArray& samples) {
  const Eigen::Index n = samples.size();
  if (n < 2) throw InsufficientSamples("variance needs at least 2 samples");
  const Complex mean = samples.mean();
  // Pool I and Q: 2n quadrature values.
  const double ss = (samples - mean).abs2().sum();
  return ss / static_cast<double>(2 * n);
}

CalibrationSet calibrate(const ComplexArray& vacuum_capture,
                         const ComplexArray& electronic_capture,
                         double eta) {
  if (vacuum_capture.size() < kMinCalibrationSamples ||
      electronic_capture.size() < kMinCalibrationSamples)
    throw InsufficientSamples("calibrate: need >= 1e4 samples per capture");

  const double var_vac = quadrature_variance(vacuum_capture);
  const double var_el = quadrature_variance(electronic_capture);
  if (var_vac <= var_el) throw NonPositiveShotNoise();

  CalibrationSet cal;
  cal.electronic_noise_variance = var_el;
  cal.shot_noise_variance = var_vac - var_el;
  cal.v_el = var_el / cal.shot_noise_variance;
  cal.eta = eta;
  cal.validate();
  return cal;
}

ComplexArray to_snu(const ComplexArray& samples, const CalibrationSet& cal) {
  cal.validate();
  return samples / std::sqrt(cal.shot_noise_variance);
}

} // namespace cvqkd
