#include "cvqkd/security.hpp"

#include "cvqkd/errors.hpp"

#include <cmath>

namespace cvqkd {

double ChannelEstimate::xi_B_std() const {
  if (per_block.size() < 2) return 0.0;
  double mean = 0.0;
  for (const auto& b : per_block) mean += b.xi_B_hat;
  mean /= per_block.size();
  double ss = 0.0;
  for (const auto& b : per_block) ss += (b.xi_B_hat - mean) * (b.xi_B_hat - mean);
  return std::sqrt(ss / (per_block.size() - 1));
}

void SecurityParams::validate() const {
  if (!(beta > 0.0) || beta > 1.0) throw ConfigError("security: beta must be in (0, 1]");
  if (fer < 0.0 || fer >= 1.0) throw ConfigError("security: fer must be in [0, 1)");
  if (!(symbol_rate > 0.0)) throw ConfigError("security: symbol_rate must be > 0");
  if (!(pilot_fraction >= 0.0) || pilot_fraction >= 1.0)
    throw ConfigError("security: pilot_fraction must be in [0, 1)");
}

ChannelEstimate estimate_parameters(const std::vector<RecoveredBlock>& blocks,
                                    double modulation_variance, const CalibrationSet& cal) {
  cal.validate();
  if (blocks.empty()) throw ConfigError("estimate_parameters: no blocks");
  if (!(modulation_variance > 0.0))
    throw ConfigError("estimate_parameters: modulation variance must be > 0");

  ChannelEstimate est;
  double t_sum = 0.0, T_sum = 0.0, xi_sum = 0.0;
  for (const auto& block : blocks) {
    const auto n = block.tx_data_symbols.size();
    if (n < 1000 || block.rx_data_symbols.size() != n)
      throw ConfigError("estimate_parameters: each block needs >= 1e3 paired symbols");

    double xx = 0.0;
    Complex xy{0.0, 0.0};
    for (Eigen::Index i = 0; i < n; ++i) {
      xx += std::norm(block.tx_data_symbols[i]);
      xy += block.rx_data_symbols[i] * std::conj(block.tx_data_symbols[i]);
    }
    const double t = xy.real() / xx;
    if (t <= 0.0)
      throw NegativeTransmittance("estimate_parameters: non-positive amplitude gain; phase recovery failed");

    double res = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      res += std::norm(block.rx_data_symbols[i] - t * block.tx_data_symbols[i]);
    const double v_res = res / (2.0 * static_cast<double>(n)); // per quadrature

    BlockEstimate b;
    b.t_hat = t;
    b.T_hat = 2.0 * t * t / cal.eta;
    b.xi_B_hat = 2.0 * (v_res - 1.0 - cal.v_el);
    est.per_block.push_back(b);
    est.n_symbols += n;
    t_sum += t;
    T_sum += b.T_hat;
    xi_sum += b.xi_B_hat;
  }

  const auto nb = static_cast<double>(blocks.size());
  est.T_hat = T_sum / nb;
  est.xi_B_hat = xi_sum / nb;
  est.xi_A_hat = est.xi_B_hat / (cal.eta * est.T_hat);
  return est;
}

double entropy_g(double x) {
  if (x <= 0.0) return 0.0;
  return (x + 1.0) * std::log2(x + 1.0) - x * std::log2(x);
}

namespace {

struct ChannelParams {
  double V;        // V_A + 1
  double chi_line; // (1-T)/T + xi_A
  double chi_het;  // (1 + (1-eta) + 2 v_el) / eta
  double chi_tot;  // chi_line + chi_het / T
};

ChannelParams channel_params(double va, double t, double xi, double eta, double v_el) {
  if (!(va > 0.0)) throw DomainError("security: modulation variance must be > 0");
  if (!(t > 0.0) || t > 1.0) throw DomainError("security: transmittance must be in (0, 1]");
  if (!(eta > 0.0) || eta > 1.0) throw DomainError("security: eta must be in (0, 1]");
  if (v_el < 0.0) throw DomainError("security: v_el must be >= 0");
  ChannelParams p;
  p.V = va + 1.0;
  p.chi_line = (1.0 - t) / t + xi;
  p.chi_het = (1.0 + (1.0 - eta) + 2.0 * v_el) / eta;
  p.chi_tot = p.chi_line + p.chi_het / t;
  if (1.0 + p.chi_tot <= 0.0) throw DomainError("security: total noise below physical bound");
  return p;
}

// Solves the lambda^2 pairs (A +/- sqrt(A^2 - 4B))/2. The small root is
// computed as B / lambda_hi^2 (the roots' product is B), which avoids the
// catastrophic cancellation of the subtractive form. Near the pure-channel
// corner the discriminant is an exact-zero expression whose double-precision
// noise gets amplified to ~1e-7 by the square root, so eigenvalues within
// 1e-6 of 1 are clamped; anything lower is a genuine instability.
void symplectic_pair(double a, double b, double& lam_hi, double& lam_lo) {
  constexpr double kClampTol = 1e-6;
  const double disc = a * a - 4.0 * b;
  if (disc < -kClampTol * std::max(1.0, a * a))
    throw NumericalInstability("holevo_bound: negative discriminant");
  // A discriminant this far below the expression's own rounding floor is an
  // exact zero (degenerate pair); taking its square root would turn 1e-14 of
  // arithmetic noise into 1e-7 of eigenvalue error.
  const double root =
      disc <= 1e-12 * std::max(1.0, a * a) ? 0.0 : std::sqrt(disc);
  const double hi2 = 0.5 * (a + root);
  if (!(hi2 > 0.0)) throw NumericalInstability("holevo_bound: non-positive eigenvalue");
  const double lo2 = b / hi2;
  lam_hi = std::sqrt(hi2);
  lam_lo = std::sqrt(std::max(0.0, lo2));
  for (double* lam : {&lam_hi, &lam_lo}) {
    if (*lam < 1.0 - kClampTol)
      throw NumericalInstability("holevo_bound: symplectic eigenvalue below 1");
    if (*lam < 1.0) *lam = 1.0;
  }
}

} // namespace

double mutual_information(double modulation_variance, double transmittance, double xi_A,
                          double eta, double v_el) {
  const ChannelParams p = channel_params(modulation_variance, transmittance, xi_A, eta, v_el);
  return std::log2((p.V + p.chi_tot) / (1.0 + p.chi_tot));
}

double holevo_bound(double modulation_variance, double transmittance, double xi_A, double eta,
                    double v_el) {
  const ChannelParams p = channel_params(modulation_variance, transmittance, xi_A, eta, v_el);
  const double V = p.V;
  const double T = transmittance;

  const double a = V * V * (1.0 - 2.0 * T) + 2.0 * T + T * T * (V + p.chi_line) * (V + p.chi_line);
  const double b = T * T * (V * p.chi_line + 1.0) * (V * p.chi_line + 1.0);
  double lam1, lam2;
  symplectic_pair(a, b, lam1, lam2);

  const double sqrt_b = std::sqrt(b);
  const double denom = T * (V + p.chi_tot);
  const double a_het = (a * p.chi_het * p.chi_het + b + 1.0 +
                        2.0 * p.chi_het * (V * sqrt_b + T * (V + p.chi_line)) +
                        2.0 * T * (V * V - 1.0)) /
                       (denom * denom);
  const double b_het_root = (V + sqrt_b * p.chi_het) / denom;
  const double b_het = b_het_root * b_het_root;
  double lam3, lam4;
  symplectic_pair(a_het, b_het, lam3, lam4);

  return entropy_g(0.5 * (lam1 - 1.0)) + entropy_g(0.5 * (lam2 - 1.0)) -
         entropy_g(0.5 * (lam3 - 1.0)) - entropy_g(0.5 * (lam4 - 1.0));
}

SkrReport secret_key_rate(double modulation_variance, double transmittance, double xi_A,
                          const CalibrationSet& cal, const SecurityParams& params) {
  params.validate();
  cal.validate();
  // Small negative estimates are statistical; the security evaluation clamps
  // them to the physical boundary.
  const double xi = std::max(0.0, xi_A);

  SkrReport report;
  report.i_ab_bits = mutual_information(modulation_variance, transmittance, xi, cal.eta, cal.v_el);
  report.chi_be_bits = holevo_bound(modulation_variance, transmittance, xi, cal.eta, cal.v_el);
  const double margin = params.beta * report.i_ab_bits - report.chi_be_bits;
  report.skr_bps = std::max(
      0.0, (1.0 - params.fer) * params.symbol_rate * (1.0 - params.pilot_fraction) * margin);
  report.modulation_variance = modulation_variance;
  report.transmittance = transmittance;
  report.xi_A = xi;
  report.eta = cal.eta;
  report.v_el = cal.v_el;
  report.params = params;
  return report;
}

SkrReport secret_key_rate(const ChannelEstimate& estimate, double modulation_variance,
                          const CalibrationSet& cal, const SecurityParams& params) {
  return secret_key_rate(modulation_variance, std::min(1.0, estimate.T_hat), estimate.xi_A_hat,
                         cal, params);
}

} // namespace cvqkd
