#pragma once

#include "cvqkd/types.hpp"

namespace cvqkd {

// Shot-noise-unit calibration of the coherent receiver.
//
// Unit convention used throughout: the shot-noise unit is the per-quadrature
// variance of a vacuum capture taken through this receiver (LO on, signal
// input blocked), after subtracting electronic noise. Dividing raw samples by
// sqrt(shot_noise_variance) therefore maps a vacuum capture to variance 1 per
// quadrature. Beware: conventions with vacuum variance 1/2 exist elsewhere;
// everything here (V_A, xi, v_el) is relative to vacuum = 1.
struct CalibrationSet {
  double shot_noise_variance = 1.0;       // raw units^2 per quadrature
  double electronic_noise_variance = 0.0; // raw units^2 per quadrature
  double v_el = 0.1;                      // electronic noise in SNU (trusted)
  double eta = 1.0;                       // receiver quantum efficiency (trusted)

  void validate() const;
};

/// Constructs a calibration directly from trusted constants, with the default
/// v_el = 0.1 SNU applied when no electronic capture is available.
CalibrationSet make_calibration(double eta, double v_el = 0.1, double shot_noise_raw = 1.0);

/// Estimates shot and electronic noise from a vacuum capture (LO on, signal
/// blocked) and an electronic capture (LO off). Variances are pooled over the
/// two quadratures. eta is a trusted constant and passes through unchanged.
CalibrationSet calibrate(const ComplexArray& vacuum_capture,
                         const ComplexArray& electronic_capture,
                         double eta);

/// Raw detector samples -> shot-noise units.
ComplexArray to_snu(const ComplexArray& samples, const CalibrationSet& cal);

/// Pooled per-quadrature sample variance (mean removed) of a complex capture.
double quadrature_variance(const ComplexArray& samples);

} // namespace cvqkd
