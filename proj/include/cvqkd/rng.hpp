#pragma once

#include "cvqkd/types.hpp"

#include <cstdint>
#include <random>

namespace cvqkd {

/// splitmix64 mixing step; used to derive independent sub-stream seeds from a
/// base seed plus stream indices without correlations between streams.
inline std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = mix_seed(base);
  s = mix_seed(s ^ (a * 0xd1342543de82ef95ULL));
  s = mix_seed(s ^ (b * 0xaf251af3b0f025b5ULL));
  s = mix_seed(s ^ (c * 0x9e3779b97f4a7c15ULL));
  return s;
}

// Deterministic Gaussian source on top of mt19937_64. std::normal_distribution
// is not specified bitwise-identically across standard libraries, so sampling
// is done with an explicit Marsaglia polar method: identical output for a
// given seed on every toolchain, which the seeded-reproducibility contract
// relies on.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { // in [0, 1)
    return (engine_() >> 11) * 0x1.0p-53;
  }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

  /// Complex sample with the given variance per quadrature.
  Complex complex_gaussian(double var_per_quad) {
    const double sigma = std::sqrt(var_per_quad);
    return {sigma * gaussian(), sigma * gaussian()};
  }

  ComplexArray complex_gaussian_array(Eigen::Index n, double var_per_quad) {
    ComplexArray out(n);
    const double sigma = std::sqrt(var_per_quad);
    for (Eigen::Index i = 0; i < n; ++i)
      out[i] = Complex{sigma * gaussian(), sigma * gaussian()};
    return out;
  }

  RealArray gaussian_array(Eigen::Index n, double variance) {
    RealArray out(n);
    const double sigma = std::sqrt(variance);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = sigma * gaussian();
    return out;
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

} // namespace cvqkd
