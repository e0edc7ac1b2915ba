#pragma once

#include "cvqkd/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cvqkd {

struct WdmChannel {
  double center_wavelength_nm = 0.0;
  double baud = 45e9;
  double power_dbm = 0.0;
};

struct WdmPlan {
  std::vector<WdmChannel> channels;
  double grid_spacing_ghz = 50.0;

  double total_power_dbm() const;
  double total_power_w() const;
  /// Rescales all channel powers so the plan totals `total_dbm`, keeping the
  /// uniform per-channel split.
  void set_total_power_dbm(double total_dbm);
  /// Throws if any channel band overlaps the quantum band.
  void validate_against_quantum(double quantum_center_nm, double signal_bandwidth_hz) const;
};

/// 15 channels on the grid, with the channel nearest to the quantum carrier
/// at `nearest_wavelength_nm` and the rest extending away from it.
WdmPlan make_wdm_plan(double nearest_wavelength_nm, double quantum_center_nm, int n_channels,
                      double grid_spacing_ghz, double channel_baud, double total_power_dbm);

struct LinkSpec {
  double fiber_length_km = 0.0;
  double fiber_attenuation_db_km = 0.2;
  double fso_loss_db = 0.0;
  double extra_loss_db = 0.0;

  void validate() const;
};

/// Power transmittance of the link, 10^(-total_dB/10).
double link_transmittance(const LinkSpec& link);

// Super-Gaussian optical band-pass filter:
//   |H(f)|^2 = 10^(-IL/10) * exp(-ln2 * (2 f / B)^(2*order)),
// with B the 3-dB bandwidth in Hz converted from the nm width at the center
// wavelength.
struct BpfSpec {
  double center_wavelength_nm = 1550.0;
  double bw_3db_nm = 1.00;
  int order = 2;
  double insertion_loss_db = 0.0;

  double bw_3db_hz() const { return bandwidth_nm_to_hz(bw_3db_nm, center_wavelength_nm); }
  void validate() const;
};

/// Amplitude gain at an offset from the filter center.
double bpf_transfer(const BpfSpec& bpf, double frequency_offset_hz);

// Residual amplified-spontaneous-emission model around the quantum band.
//
// The classical transmitter's amplifier ASE is shaped by the optical
// processor: a notch of `notch_suppression_db` in the quantum band leaves the
// flat floor psd*10^(-notch/10), while per-channel pedestals
// psd*exp(-(f-f_ch)^2/(2 sigma^2)) model the ASE passed around each classical
// carrier (sigma defaults to the channel baud). Everything scales linearly
// with the total launch power relative to `reference_power_dbm`.
//
// Two coupling paths convert this optical noise into quantum-band noise:
//  * direct: the PSD integrated over the signal bandwidth (beat with the LO);
//  * broadband incidence: the total noise power reaching the photodiodes,
//    weighted by the receiver BPF and a small detector conversion coefficient
//    `dd_conversion`. This term carries the band-pass-filter on/off
//    difference; with the BPF removed the full pedestal power lands on the
//    detector. Both device constants are calibration knobs, not measured
//    values.
struct AseModel {
  double psd_at_source_w_hz = 0.0; // pedestal peak PSD at reference power
  double notch_suppression_db = 60.0;
  double reference_power_dbm = 0.0;
  double pedestal_sigma_hz = 45e9;
  double dd_conversion = 0.0;
};

/// Effective ASE power (W) coupled into the quantum receiver's signal band.
/// Pass no BPF to model the filterless receiver. Linear in total launch power.
double ase_inband_power(const AseModel& ase, const WdmPlan& plan,
                        const std::optional<BpfSpec>& bpf, double quantum_center_nm,
                        double signal_bandwidth_hz);

/// Receiver-referred excess noise (SNU) of broadband noise power P within the
/// signal band: two photons-per-symbol-mode worth of variance per quadrature
/// pair, xi = 2 P / (h nu R).
double noise_to_excess(double power_w, double quantum_wavelength_nm, double symbol_rate);

struct RamanTable {
  // Rows of (wavelength offset in nm, coefficient in 1/(km*nm) per watt of
  // pump), sorted by offset; linear interpolation between rows. Shipped
  // defaults are order-of-magnitude placeholders, unvalidated.
  std::vector<std::pair<double, double>> rows;

  double coefficient(double delta_lambda_nm) const; // throws MissingCoefficient
};

RamanTable load_raman_table(const std::string& path);

/// Spontaneous Raman power (W) scattered into the quantum band over the fiber
/// span. Zero for zero fiber length (free-space path).
double raman_power(const WdmPlan& plan, const LinkSpec& link, double quantum_center_nm,
                   const RamanTable& table, double signal_bandwidth_hz);

struct LaserSpec {
  double combined_linewidth_hz = 5e3; // Alice + LO Lorentzian sum
  double frequency_offset_hz = 0.0;

  void validate() const;
};

// Applies the optical path to a sampled waveform:
//   out = sqrt(T) * in * exp(i(2 pi df t + phi(t))) + n(t),
// phi a Wiener process with per-sample increment variance
// 2 pi linewidth / sample_rate, and n white complex Gaussian noise with
// `added_noise_snu` variance per quadrature per sample. With unit-energy
// pulse filters a per-sample variance equals a per-symbol-mode variance, so
// the value passed here is the optical noise PSD normalized to the vacuum
// level h*nu/2 (i.e. W/Hz expressed in SNU/Hz). Deterministic given the seed.
ComplexArray propagate(const ComplexArray& waveform, double transmittance,
                       const LaserSpec& laser, double added_noise_snu, double sample_rate,
                       std::uint64_t rng_seed);

} // namespace cvqkd
