#include "cvqkd/channel.hpp"

#include "cvqkd/errors.hpp"
#include "cvqkd/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <fstream>
#include <sstream>

namespace cvqkd {

double WdmPlan::total_power_w() const {
  double total = 0.0;
  for (const auto& ch : channels) total += dbm_to_watt(ch.power_dbm);
  return total;
}

double WdmPlan::total_power_dbm() const { return watt_to_dbm(total_power_w()); }

void WdmPlan::set_total_power_dbm(double total_dbm) {
  if (channels.empty()) throw ConfigError("wdm plan has no channels");
  const double per_channel = total_dbm - linear_to_db(static_cast<double>(channels.size()));
  for (auto& ch : channels) ch.power_dbm = per_channel;
}

void WdmPlan::validate_against_quantum(double quantum_center_nm,
                                       double signal_bandwidth_hz) const {
  const double fq = frequency_from_wavelength_nm(quantum_center_nm);
  for (const auto& ch : channels) {
    const double fc = frequency_from_wavelength_nm(ch.center_wavelength_nm);
    if (std::abs(fc - fq) < 0.5 * (ch.baud + signal_bandwidth_hz))
      throw ConfigError("wdm plan: classical channel overlaps the quantum band");
  }
}

WdmPlan make_wdm_plan(double nearest_wavelength_nm, double quantum_center_nm, int n_channels,
                      double grid_spacing_ghz, double channel_baud, double total_power_dbm) {
  if (n_channels < 1) throw ConfigError("wdm plan: need at least one channel");
  WdmPlan plan;
  plan.grid_spacing_ghz = grid_spacing_ghz;
  const double f_nearest = frequency_from_wavelength_nm(nearest_wavelength_nm);
  const double f_quantum = frequency_from_wavelength_nm(quantum_center_nm);
  // Extend away from the quantum carrier in frequency.
  const double direction = (f_nearest > f_quantum) ? 1.0 : -1.0;
  for (int k = 0; k < n_channels; ++k) {
    WdmChannel ch;
    const double f = f_nearest + direction * k * grid_spacing_ghz * 1e9;
    ch.center_wavelength_nm = constants::speed_of_light / f * 1e9;
    ch.baud = channel_baud;
    plan.channels.push_back(ch);
  }
  plan.set_total_power_dbm(total_power_dbm);
  return plan;
}

void LinkSpec::validate() const {
  if (fiber_length_km < 0.0 || fiber_attenuation_db_km < 0.0 || fso_loss_db < 0.0 ||
      extra_loss_db < 0.0)
    throw ConfigError("link: losses and length must be >= 0");
}

double link_transmittance(const LinkSpec& link) {
  link.validate();
  const double loss_db =
      link.fiber_length_km * link.fiber_attenuation_db_km + link.fso_loss_db + link.extra_loss_db;
  return std::pow(10.0, -loss_db / 10.0);
}

void BpfSpec::validate() const {
  if (order < 1) throw ConfigError("bpf: order must be >= 1");
  if (!(bw_3db_nm > 0.0)) throw ConfigError("bpf: bandwidth must be > 0");
  if (insertion_loss_db < 0.0) throw ConfigError("bpf: insertion loss must be >= 0");
}

double bpf_transfer(const BpfSpec& bpf, double frequency_offset_hz) {
  bpf.validate();
  const double b = bpf.bw_3db_hz();
  const double x = 2.0 * frequency_offset_hz / b;
  const double h2 = db_to_linear(-bpf.insertion_loss_db) *
                    std::exp(-M_LN2 * std::pow(x * x, bpf.order));
  return std::sqrt(h2);
}

namespace {

// ASE PSD shape (W/Hz at reference power) at offset f from the quantum
// carrier; f_ch are channel offsets in Hz.
double ase_psd(const AseModel& ase, const std::vector<double>& channel_offsets, double f) {
  double s = db_to_linear(-ase.notch_suppression_db);
  const double sig2 = 2.0 * ase.pedestal_sigma_hz * ase.pedestal_sigma_hz;
  for (double fc : channel_offsets) {
    const double d = f - fc;
    s += std::exp(-d * d / sig2);
  }
  return ase.psd_at_source_w_hz * s;
}

double bpf_power_gain(const std::optional<BpfSpec>& bpf, double f) {
  if (!bpf) return 1.0;
  const double h = bpf_transfer(*bpf, f);
  return h * h;
}

double trapezoid(const std::function<double(double)>& g, double a, double b, int n) {
  const double h = (b - a) / n;
  double acc = 0.5 * (g(a) + g(b));
  for (int i = 1; i < n; ++i) acc += g(a + i * h);
  return acc * h;
}

} // namespace

double ase_inband_power(const AseModel& ase, const WdmPlan& plan,
                        const std::optional<BpfSpec>& bpf, double quantum_center_nm,
                        double signal_bandwidth_hz) {
  if (!(signal_bandwidth_hz > 0.0)) throw ConfigError("ase: signal bandwidth must be > 0");
  if (ase.psd_at_source_w_hz < 0.0 || ase.notch_suppression_db < 0.0)
    throw ConfigError("ase: psd and notch suppression must be >= 0");
  if (ase.psd_at_source_w_hz == 0.0) return 0.0;

  const double fq = frequency_from_wavelength_nm(quantum_center_nm);
  std::vector<double> offsets;
  double max_offset = 0.0;
  for (const auto& ch : plan.channels) {
    const double off = frequency_from_wavelength_nm(ch.center_wavelength_nm) - fq;
    offsets.push_back(off);
    max_offset = std::max(max_offset, std::abs(off));
  }

  const double power_scale = plan.total_power_w() / dbm_to_watt(ase.reference_power_dbm);
  const auto integrand = [&](double f) {
    return ase_psd(ase, offsets, f) * bpf_power_gain(bpf, f);
  };

  // Direct in-band coupling over the signal bandwidth.
  double p = trapezoid(integrand, -0.5 * signal_bandwidth_hz, 0.5 * signal_bandwidth_hz, 64);

  // Broadband incidence on the photodetector, converted with dd_conversion.
  if (ase.dd_conversion > 0.0) {
    double extent = max_offset + 6.0 * ase.pedestal_sigma_hz;
    if (bpf) extent = std::max(extent, 3.0 * bpf->bw_3db_hz());
    extent = std::max(extent, 10.0 * signal_bandwidth_hz);
    const int n = std::min(40000, std::max(2000, static_cast<int>(
                      2.0 * extent / (ase.pedestal_sigma_hz / 25.0))));
    p += ase.dd_conversion * trapezoid(integrand, -extent, extent, n);
  }

  return power_scale * p;
}

double noise_to_excess(double power_w, double quantum_wavelength_nm, double symbol_rate) {
  if (power_w < 0.0) throw ConfigError("noise_to_excess: power must be >= 0");
  if (!(symbol_rate > 0.0)) throw ConfigError("noise_to_excess: symbol rate must be > 0");
  const double photon_energy =
      constants::planck * frequency_from_wavelength_nm(quantum_wavelength_nm);
  return 2.0 * power_w / (photon_energy * symbol_rate);
}

double RamanTable::coefficient(double delta_lambda_nm) const {
  if (rows.size() < 2) throw MissingCoefficient("raman table needs at least two rows");
  if (delta_lambda_nm < rows.front().first || delta_lambda_nm > rows.back().first) {
    std::ostringstream oss;
    oss << "raman table does not cover offset " << delta_lambda_nm << " nm";
    throw MissingCoefficient(oss.str());
  }
  const auto it = std::lower_bound(
      rows.begin(), rows.end(), delta_lambda_nm,
      [](const std::pair<double, double>& r, double x) { return r.first < x; });
  if (it == rows.begin()) return it->second;
  const auto lo = it - 1;
  const double t = (delta_lambda_nm - lo->first) / (it->first - lo->first);
  return lo->second + t * (it->second - lo->second);
}

RamanTable load_raman_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open raman table: " + path);
  RamanTable table;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream iss(line);
    double dl, rho;
    if (iss >> dl >> rho) table.rows.emplace_back(dl, rho);
  }
  std::sort(table.rows.begin(), table.rows.end());
  if (table.rows.size() < 2) throw ConfigError("raman table needs at least two rows: " + path);
  return table;
}

double raman_power(const WdmPlan& plan, const LinkSpec& link, double quantum_center_nm,
                   const RamanTable& table, double signal_bandwidth_hz) {
  link.validate();
  if (link.fiber_length_km == 0.0) return 0.0;
  const double alpha = link.fiber_attenuation_db_km * M_LN10 / 10.0; // 1/km
  const double l_eff = alpha > 0.0
                           ? (1.0 - std::exp(-alpha * link.fiber_length_km)) / alpha
                           : link.fiber_length_km;
  const double bw_nm = signal_bandwidth_hz /
                       bandwidth_nm_to_hz(1.0, quantum_center_nm); // Hz -> nm at the carrier
  double p = 0.0;
  for (const auto& ch : plan.channels) {
    const double dl = ch.center_wavelength_nm - quantum_center_nm;
    p += dbm_to_watt(ch.power_dbm) * table.coefficient(dl) * l_eff * bw_nm;
  }
  return p;
}

void LaserSpec::validate() const {
  if (combined_linewidth_hz < 0.0) throw ConfigError("laser: linewidth must be >= 0");
}

ComplexArray propagate(const ComplexArray& waveform, double transmittance,
                       const LaserSpec& laser, double added_noise_snu, double sample_rate,
                       std::uint64_t rng_seed) {
  if (!(transmittance > 0.0) || transmittance > 1.0)
    throw ConfigError("propagate: transmittance must be in (0, 1]");
  laser.validate();
  if (added_noise_snu < 0.0) throw ConfigError("propagate: noise variance must be >= 0");

  const Eigen::Index n = waveform.size();
  ComplexArray out(n);
  Rng rng(rng_seed);

  const double amp = std::sqrt(transmittance);
  const double dphi_var = 2.0 * M_PI * laser.combined_linewidth_hz / sample_rate;
  const double dphi_sigma = std::sqrt(dphi_var);
  const double dtheta = 2.0 * M_PI * laser.frequency_offset_hz / sample_rate;
  const Complex cfo_step{std::cos(dtheta), std::sin(dtheta)};

  // The Wiener increments are small (sub-mrad per sample for any realistic
  // linewidth), so e^{i d} is expanded to second order and the running
  // rotator renormalized periodically; the offset rotator is re-anchored
  // exactly on the same schedule.
  Complex rot_walk{1.0, 0.0};
  Complex rot_cfo{1.0, 0.0};
  for (Eigen::Index k = 0; k < n; ++k) {
    if (dphi_sigma > 0.0) {
      const double d = dphi_sigma * rng.gaussian();
      const double d2 = d * d;
      // Second-order rotator; (1 - d^2/2)^2 + d^2 = 1 + d^4/4 exactly, so
      // this normalization keeps the random walk on the unit circle.
      const double fix = 1.0 / std::sqrt(1.0 + 0.25 * d2 * d2);
      rot_walk *= Complex{(1.0 - 0.5 * d2) * fix, d * fix};
    }
    if (k % 256 == 0) {
      rot_walk /= std::abs(rot_walk);
      const double a = dtheta * static_cast<double>(k);
      rot_cfo = Complex{std::cos(a), std::sin(a)};
    }
    out[k] = amp * waveform[k] * rot_walk * rot_cfo;
    rot_cfo *= cfo_step;
  }
  if (added_noise_snu > 0.0) {
    const double sigma = std::sqrt(added_noise_snu);
    for (Eigen::Index k = 0; k < n; ++k)
      out[k] += Complex{sigma * rng.gaussian(), sigma * rng.gaussian()};
  }
  return out;
}

} // namespace cvqkd
