#include "cvqkd/rrc.hpp"

#include "cvqkd/errors.hpp"

#include <cmath>

namespace cvqkd {

RealArray rrc_taps(int samples_per_symbol, double rolloff, int span_symbols) {
  if (samples_per_symbol < 2) throw ConfigError("rrc: samples_per_symbol must be >= 2");
  if (rolloff <= 0.0 || rolloff >= 1.0) throw ConfigError("rrc: rolloff must be in (0, 1)");
  if (span_symbols < 2) throw ConfigError("rrc: span_symbols must be >= 2");

  const int half = span_symbols * samples_per_symbol;
  const int n = 2 * half + 1;
  RealArray h(n);
  const double beta = rolloff;
  for (int i = 0; i < n; ++i) {
    const double t = static_cast<double>(i - half) / samples_per_symbol; // in symbols
    double v;
    if (std::abs(t) < 1e-12) {
      v = 1.0 + beta * (4.0 / M_PI - 1.0);
    } else if (std::abs(std::abs(t) - 1.0 / (4.0 * beta)) < 1e-9) {
      v = beta / std::sqrt(2.0) *
          ((1.0 + 2.0 / M_PI) * std::sin(M_PI / (4.0 * beta)) +
           (1.0 - 2.0 / M_PI) * std::cos(M_PI / (4.0 * beta)));
    } else {
      const double num = std::sin(M_PI * t * (1.0 - beta)) +
                         4.0 * beta * t * std::cos(M_PI * t * (1.0 + beta));
      const double den = M_PI * t * (1.0 - std::pow(4.0 * beta * t, 2));
      v = num / den;
    }
    h[i] = v;
  }
  h /= std::sqrt(h.square().sum());
  return h;
}

ComplexArray convolve(const ComplexArray& x, const RealArray& taps) {
  const Eigen::Index nx = x.size();
  const Eigen::Index nt = taps.size();
  RealArray yr = RealArray::Zero(nx + nt - 1);
  RealArray yi = RealArray::Zero(nx + nt - 1);
  for (Eigen::Index i = 0; i < nx; ++i) {
    const Complex xi = x[i];
    if (xi == Complex{0.0, 0.0}) continue;
    yr.segment(i, nt) += xi.real() * taps;
    yi.segment(i, nt) += xi.imag() * taps;
  }
  ComplexArray y(nx + nt - 1);
  y.real() = yr;
  y.imag() = yi;
  return y;
}

ComplexArray upsample_filter(const ComplexArray& symbols, const RealArray& taps, int factor) {
  const Eigen::Index ns = symbols.size();
  const Eigen::Index nt = taps.size();
  RealArray yr = RealArray::Zero(ns * factor + nt - 1);
  RealArray yi = RealArray::Zero(ns * factor + nt - 1);
  for (Eigen::Index i = 0; i < ns; ++i) {
    const Complex s = symbols[i];
    if (s == Complex{0.0, 0.0}) continue;
    const Eigen::Index base = i * factor;
    yr.segment(base, nt) += s.real() * taps;
    yi.segment(base, nt) += s.imag() * taps;
  }
  ComplexArray y(ns * factor + nt - 1);
  y.real() = yr;
  y.imag() = yi;
  return y;
}

} // namespace cvqkd
