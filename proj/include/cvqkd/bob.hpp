#pragma once

#include "cvqkd/alice.hpp"
#include "cvqkd/snu.hpp"
#include "cvqkd/types.hpp"

#include <cstdint>

namespace cvqkd {

struct RxCapture {
  ComplexArray samples; // raw detector units
  double sample_rate = 2e9;
  CalibrationSet cal;
};

struct DspConfig {
  double cfo_search_range_hz = 20e6;
  int cfo_fft_size = 1 << 20;
  int equalizer_taps = 21; // odd
  double equalizer_step = 1e-3;
  int phase_pilot_window = 32;
  int adc_bits = 0;        // 0 disables the quantizer hook
  double adc_full_scale = 0.0;

  void validate() const;
};

struct RecoveredBlock {
  ComplexArray tx_data_symbols; // SNU
  ComplexArray rx_data_symbols; // SNU
  Eigen::Index block_length = 0;
  double residual_cfo_hz = 0.0;
  double mean_phase_error_rad = 0.0;
};

// Trusted-receiver heterodyne detection. The efficiency eta attenuates the
// incoming field amplitude; both quadratures are measured simultaneously, so
// the signal additionally loses 3 dB at the hybrid split while the total
// quantum noise stays at exactly one vacuum unit per quadrature (loss and
// split only exchange which vacuum port contributes). Electronic noise of
// v_el shot-noise units is added on top, and the output is scaled to raw
// detector units consistent with the calibration:
//   y_raw = sqrt(shot) * ( sqrt(eta/2) * w + n ),  var(n) = 1 + v_el per quad.
RxCapture detect(const ComplexArray& optical_waveform, double sample_rate,
                 const CalibrationSet& cal, std::uint64_t rng_seed);

/// Frequency offset (Hz) from the spectral peak of rx * conj(expected pilot
/// waveform), refined by quadratic interpolation of the peak bin.
double estimate_cfo(const RxCapture& capture, const SymbolFrame& frame, const DspConfig& cfg);

/// Derotates the capture by exp(-i 2 pi cfo t); exact inverse of a pure
/// frequency rotation.
RxCapture compensate_cfo(const RxCapture& capture, double cfo_hz);

/// Matched RRC filter and decimation to symbol rate (SNU output). Symbol
/// timing is picked by maximizing pilot correlation over the sampling phases
/// and pilot alignments.
ComplexArray matched_filter_downsample(const RxCapture& capture, const SymbolFrame& frame);

struct EqualizerDiagnostics {
  // Trailing average of the pilot-error power |e|^2, one entry per 1/8 of
  // the adaptation pass; non-increasing once converged.
  std::vector<double> error_trailing_avg;
};

/// Pilot-directed normalized-LMS FIR equalizer. Taps adapt on pilot symbols
/// only; the converged tap average, rescaled to unit noise gain so the SNU
/// calibration survives, is then applied to the whole block.
ComplexArray equalize(const ComplexArray& symbols, const SymbolFrame& frame,
                      const DspConfig& cfg, EqualizerDiagnostics* diagnostics = nullptr);

/// Pilot-based carrier phase recovery: per-pilot rotations are smoothed by a
/// centered moving average over `phase_pilot_window` pilots (complex domain,
/// then unwrapped), linearly interpolated onto data positions and removed.
/// Returns the paired data symbols only.
RecoveredBlock phase_recover(const ComplexArray& symbols, const SymbolFrame& frame,
                             const DspConfig& cfg);

/// Full receive chain: CFO estimate/compensate, matched filter + timing,
/// equalization, phase recovery.
RecoveredBlock process_block(const RxCapture& capture, const SymbolFrame& frame,
                             const DspConfig& cfg);

} // namespace cvqkd
