#include "cvqkd/alice.hpp"

#include "cvqkd/errors.hpp"
#include "cvqkd/rng.hpp"
#include "cvqkd/rrc.hpp"

#include <algorithm>
#include <cmath>

namespace cvqkd {

namespace {

bool is_perfect_square(int n, int& root) {
  const int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  root = r;
  return r * r == n;
}

} // namespace

double ConstellationSpec::entropy_bits() const {
  double h = 0.0;
  for (double p : probabilities)
    if (p > 0.0) h -= p * std::log2(p);
  return h;
}

void ConstellationSpec::validate() const {
  if (points.size() != probabilities.size() || points.empty())
    throw ConfigError("constellation: points/probabilities size mismatch");
  double sum = 0.0;
  for (double p : probabilities) {
    if (p < 0.0) throw ConfigError("constellation: negative probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw ConfigError("constellation: probabilities do not sum to 1");
}

ConstellationSpec build_constellation(int order, double nu, double modulation_variance) {
  int root = 0;
  if (order < 4 || !is_perfect_square(order, root))
    throw InvalidOrder("constellation order must be a perfect square >= 4");
  if (nu < 0.0) throw ConfigError("constellation: nu must be >= 0");
  if (!(modulation_variance > 0.0)) throw ConfigError("constellation: V_A must be > 0");

  ConstellationSpec c;
  c.order = order;
  c.nu = nu;
  c.modulation_variance = modulation_variance;
  c.points.reserve(order);
  c.probabilities.reserve(order);

  // Odd-integer grid: +/-1, +/-3, ..., +/-(root-1).
  double norm = 0.0;
  for (int i = 0; i < root; ++i) {
    const double gi = 2.0 * i - (root - 1);
    for (int q = 0; q < root; ++q) {
      const double gq = 2.0 * q - (root - 1);
      const double e = gi * gi + gq * gq;
      const double w = std::exp(-nu * e);
      c.points.emplace_back(gi, gq);
      c.probabilities.push_back(w);
      norm += w;
    }
  }
  for (double& p : c.probabilities) p /= norm;

  // Per-quadrature variance on the grid (mean is zero by symmetry).
  double var_quad = 0.0;
  for (std::size_t k = 0; k < c.points.size(); ++k)
    var_quad += c.probabilities[k] * c.points[k].real() * c.points[k].real();
  c.scale = std::sqrt(modulation_variance / var_quad);
  for (auto& p : c.points) p *= c.scale;
  c.validate();
  return c;
}

double shaping_rate_for_entropy(int order, double target_bits) {
  const double max_bits = std::log2(static_cast<double>(order));
  if (target_bits <= 0.0 || target_bits > max_bits)
    throw ConfigError("shaping entropy target out of range");
  double lo = 0.0, hi = 1.0;
  // Entropy is monotone decreasing in nu; expand hi until below target.
  while (build_constellation(order, hi, 1.0).entropy_bits() > target_bits) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (build_constellation(order, mid, 1.0).entropy_bits() > target_bits)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-14) break;
  }
  return 0.5 * (lo + hi);
}

std::vector<Complex> default_pilot_sequence(double modulation_variance, double boost_db,
                                            int length) {
  // QPSK at the average data symbol power (2*V_A complex power), times boost.
  const double amp = std::sqrt(modulation_variance * db_to_linear(boost_db));
  std::vector<Complex> seq(length);
  Rng rng(0x70696c6f74ULL); // fixed: the pilot pattern is part of the frame spec
  for (int i = 0; i < length; ++i) {
    const double re = rng.uniform() < 0.5 ? -amp : amp;
    const double im = rng.uniform() < 0.5 ? -amp : amp;
    seq[i] = {re, im};
  }
  return seq;
}

void FrameSpec::validate() const {
  if (!(symbol_rate > 0.0)) throw ConfigError("frame: symbol_rate must be > 0");
  if (!(pilot_fraction > 0.0) || pilot_fraction >= 1.0)
    throw ConfigError("frame: pilot_fraction must be in (0, 1)");
  if (samples_per_symbol < 2) throw ConfigError("frame: samples_per_symbol must be >= 2");
  if (pilot_sequence.empty()) throw ConfigError("frame: pilot sequence empty");
}

FrameSpec make_frame_spec(const ConstellationSpec& constellation, double symbol_rate,
                          double pilot_fraction, int samples_per_symbol, double rrc_rolloff,
                          int rrc_span_symbols, double pilot_power_boost_db) {
  FrameSpec spec;
  spec.symbol_rate = symbol_rate;
  spec.pilot_fraction = pilot_fraction;
  spec.samples_per_symbol = samples_per_symbol;
  spec.rrc_rolloff = rrc_rolloff;
  spec.rrc_span_symbols = rrc_span_symbols;
  spec.pilot_power_boost_db = pilot_power_boost_db;
  spec.pilot_sequence =
      default_pilot_sequence(constellation.modulation_variance, pilot_power_boost_db);
  spec.validate();
  return spec;
}

SymbolFrame generate_frame(const ConstellationSpec& constellation, const FrameSpec& spec,
                           Eigen::Index n_symbols, std::uint64_t rng_seed) {
  constellation.validate();
  spec.validate();
  if (n_symbols < 2) throw ConfigError("generate_frame: need at least 2 symbols");

  // Cumulative distribution for inverse-CDF sampling.
  std::vector<double> cdf(constellation.probabilities.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < cdf.size(); ++i) {
    acc += constellation.probabilities[i];
    cdf[i] = acc;
  }
  cdf.back() = 1.0;

  SymbolFrame frame;
  frame.spec = spec;
  frame.tx_symbols.resize(n_symbols);
  frame.pilot_mask.resize(n_symbols);

  Rng rng(rng_seed);
  Eigen::Index pilot_count = 0;
  std::size_t pilot_idx = 0;
  for (Eigen::Index i = 0; i < n_symbols; ++i) {
    // Bresenham-style placement; for fraction 0.5 this is strict alternation
    // starting with a pilot.
    const auto due = static_cast<Eigen::Index>(
        std::ceil(static_cast<double>(i + 1) * spec.pilot_fraction - 1e-12));
    const bool is_pilot = due > pilot_count;
    frame.pilot_mask[i] = is_pilot;
    if (is_pilot) {
      frame.tx_symbols[i] = spec.pilot_sequence[pilot_idx % spec.pilot_sequence.size()];
      ++pilot_idx;
      ++pilot_count;
    } else {
      const double u = rng.uniform();
      const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
      const auto k = static_cast<std::size_t>(it - cdf.begin());
      frame.tx_symbols[i] = constellation.points[std::min(k, constellation.points.size() - 1)];
    }
  }
  return frame;
}

ComplexArray pulse_shape(const SymbolFrame& frame) {
  frame.spec.validate();
  const RealArray taps = rrc_taps(frame.spec.samples_per_symbol, frame.spec.rrc_rolloff,
                                  frame.spec.rrc_span_symbols);
  return upsample_filter(frame.tx_symbols, taps, frame.spec.samples_per_symbol);
}

} // namespace cvqkd
