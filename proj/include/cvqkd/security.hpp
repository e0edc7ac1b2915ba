#pragma once

#include "cvqkd/bob.hpp"
#include "cvqkd/snu.hpp"
#include "cvqkd/types.hpp"

#include <vector>

namespace cvqkd {

struct BlockEstimate {
  double t_hat = 0.0;    // complex-amplitude gain, y ~ t x
  double T_hat = 0.0;    // channel transmittance with eta removed
  double xi_B_hat = 0.0; // receiver-referred excess noise, SNU
};

struct ChannelEstimate {
  double T_hat = 0.0;
  double xi_A_hat = 0.0; // channel-input-referred, SNU
  double xi_B_hat = 0.0; // receiver-referred, = eta*T*xi_A
  std::vector<BlockEstimate> per_block;
  Eigen::Index n_symbols = 0;

  double xi_B_std() const; // scatter of the per-block estimates
};

struct SecurityParams {
  double beta = 0.95;          // reconciliation efficiency
  double fer = 0.0;            // frame error rate
  double symbol_rate = 250e6;  // Hz
  double pilot_fraction = 0.5;

  void validate() const;
};

struct SkrReport {
  double i_ab_bits = 0.0;  // per symbol
  double chi_be_bits = 0.0;
  double skr_bps = 0.0;
  // Inputs echoed for the record.
  double modulation_variance = 0.0;
  double transmittance = 0.0;
  double xi_A = 0.0;
  double eta = 0.0;
  double v_el = 0.0;
  SecurityParams params;
};

// Per block, with symbols in SNU:
//   t = Re(sum y conj(x)) / sum |x|^2,   eta T = 2 t^2
// (the factor 2 undoes the heterodyne 3-dB split), and
//   V_res = (1/2N) sum |y - t x|^2,      xi_B = 2 (V_res - 1 - v_el)
// with the heterodyne vacuum unit inside the "1". Aggregates are means over
// blocks; xi_A refers the noise back to the channel input.
ChannelEstimate estimate_parameters(const std::vector<RecoveredBlock>& blocks,
                                    double modulation_variance, const CalibrationSet& cal);

/// G((lambda-1)/2) terms of Gaussian state entropies:
/// G(x) = (x+1) log2(x+1) - x log2 x, G(0) = 0.
double entropy_g(double x);

/// Heterodyne mutual information of the trusted-detector Gaussian channel,
/// bits per symbol.
double mutual_information(double modulation_variance, double transmittance, double xi_A,
                          double eta, double v_el);

/// Holevo bound on Eve's information for collective attacks, trusted
/// receiver, heterodyne detection; closed-form symplectic eigenvalues.
double holevo_bound(double modulation_variance, double transmittance, double xi_A, double eta,
                    double v_el);

SkrReport secret_key_rate(double modulation_variance, double transmittance, double xi_A,
                          const CalibrationSet& cal, const SecurityParams& params);

SkrReport secret_key_rate(const ChannelEstimate& estimate, double modulation_variance,
                          const CalibrationSet& cal, const SecurityParams& params);

} // namespace cvqkd
