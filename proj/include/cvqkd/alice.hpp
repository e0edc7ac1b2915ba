#pragma once

#include "cvqkd/types.hpp"

#include <cstdint>
#include <vector>

namespace cvqkd {

// Probabilistically shaped square-QAM constellation. Probabilities follow a
// Maxwell-Boltzmann weighting exp(-nu*|g|^2) over the odd-integer grid g, and
// `scale` maps grid coordinates to transmit amplitudes such that the
// per-quadrature symbol variance equals the requested modulation variance
// (SNU, vacuum = 1).
struct ConstellationSpec {
  int order = 256;
  std::vector<Complex> points;      // transmit amplitudes, SNU
  std::vector<double> probabilities;
  double nu = 0.0;                  // shaping rate on the integer grid
  double scale = 1.0;               // grid -> SNU amplitude multiplier
  double modulation_variance = 8.0; // V_A, per quadrature

  double entropy_bits() const;
  void validate() const;
};

struct FrameSpec {
  double symbol_rate = 250e6;
  double pilot_fraction = 0.5;
  std::vector<Complex> pilot_sequence; // cycled; filled by make_frame_spec
  int samples_per_symbol = 8;
  double rrc_rolloff = 0.2;
  int rrc_span_symbols = 20;
  // Pilot symbols may be boosted above the average data power to improve
  // phase/frequency tracking at quantum-signal SNR; 0 dB keeps them at the
  // data power.
  double pilot_power_boost_db = 0.0;

  double sample_rate() const { return symbol_rate * samples_per_symbol; }
  void validate() const;
};

struct SymbolFrame {
  ComplexArray tx_symbols; // SNU amplitudes, pilots + data interleaved
  BoolArray pilot_mask;    // true at pilot positions
  FrameSpec spec;

  Eigen::Index size() const { return tx_symbols.size(); }
};

ConstellationSpec build_constellation(int order, double nu, double modulation_variance);

/// Shaping rate such that the Maxwell-Boltzmann distribution over the given
/// QAM order has the requested entropy (bits/symbol). Solved by bisection.
double shaping_rate_for_entropy(int order, double target_bits);

/// Fixed pseudorandom QPSK pilot sequence at the average data power of the
/// constellation, scaled by the frame's pilot boost.
std::vector<Complex> default_pilot_sequence(double modulation_variance, double boost_db,
                                            int length = 64);

FrameSpec make_frame_spec(const ConstellationSpec& constellation, double symbol_rate,
                          double pilot_fraction, int samples_per_symbol, double rrc_rolloff,
                          int rrc_span_symbols, double pilot_power_boost_db);

/// Interleaves i.i.d. shaped data symbols with the cyclic pilot sequence.
/// Deterministic for a given seed.
SymbolFrame generate_frame(const ConstellationSpec& constellation, const FrameSpec& spec,
                           Eigen::Index n_symbols, std::uint64_t rng_seed);

/// Root-raised-cosine interpolation of the frame to the sample rate. Output
/// length is n_symbols*sps + taps - 1 (full convolution); symbol k is
/// centered at sample k*sps + span*sps.
ComplexArray pulse_shape(const SymbolFrame& frame);

} // namespace cvqkd
