#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cmath>

namespace cvqkd {

// Complex baseband sample/symbol streams. All quadrature data is stored as
// complex<double> with I = real, Q = imag. Shot-noise units (SNU) follow the
// vacuum-variance-one convention: a vacuum capture has variance 1 per
// quadrature, so a modulation variance of V_A means var(I) = var(Q) = V_A.
using ComplexArray = Eigen::ArrayXcd;
using RealArray = Eigen::ArrayXd;
using BoolArray = Eigen::Array<bool, Eigen::Dynamic, 1>;
using Complex = std::complex<double>;

namespace constants {
inline constexpr double planck = 6.62607015e-34;     // J*s
inline constexpr double speed_of_light = 299792458.; // m/s
} // namespace constants

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_watt(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w / 1e-3); }

/// Optical frequency (Hz) of a vacuum wavelength given in nm.
inline double frequency_from_wavelength_nm(double lambda_nm) {
  return constants::speed_of_light / (lambda_nm * 1e-9);
}

/// Width conversion nm -> Hz around a carrier wavelength (first order).
inline double bandwidth_nm_to_hz(double bw_nm, double center_nm) {
  const double lambda = center_nm * 1e-9;
  return constants::speed_of_light * bw_nm * 1e-9 / (lambda * lambda);
}

} // namespace cvqkd
