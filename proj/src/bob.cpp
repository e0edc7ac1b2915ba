#include "cvqkd/bob.hpp"

#include "cvqkd/errors.hpp"
#include "cvqkd/rng.hpp"
#include "cvqkd/rrc.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <vector>

namespace cvqkd {

void DspConfig::validate() const {
  if (equalizer_taps < 1 || equalizer_taps % 2 == 0)
    throw ConfigError("dsp: equalizer_taps must be odd and >= 1");
  if (equalizer_step < 0.0) throw ConfigError("dsp: equalizer_step must be >= 0");
  if (phase_pilot_window < 1) throw ConfigError("dsp: phase_pilot_window must be >= 1");
  if (cfo_fft_size < 1024) throw ConfigError("dsp: cfo_fft_size too small");
  if (adc_bits < 0 || adc_bits > 16) throw ConfigError("dsp: adc_bits out of range");
}

RxCapture detect(const ComplexArray& optical_waveform, double sample_rate,
                 const CalibrationSet& cal, std::uint64_t rng_seed) {
  cal.validate();
  const Eigen::Index n = optical_waveform.size();
  RxCapture capture;
  capture.sample_rate = sample_rate;
  capture.cal = cal;
  capture.samples.resize(n);

  Rng rng(rng_seed);
  const double gain = std::sqrt(cal.eta / 2.0);
  const double noise_sigma = std::sqrt(1.0 + cal.v_el); // per quadrature, SNU
  const double raw_scale = std::sqrt(cal.shot_noise_variance);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Complex y = gain * optical_waveform[k] +
                      Complex{noise_sigma * rng.gaussian(), noise_sigma * rng.gaussian()};
    capture.samples[k] = raw_scale * y;
  }
  return capture;
}

namespace {

// The pilot reference waveform depends only on the frame layout (pilot
// positions and the cyclic pilot sequence), not on the data payload, so it is
// identical across the blocks of a run. Cache it keyed on the layout.
std::uint64_t frame_layout_key(const SymbolFrame& frame) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ULL;
  };
  mix(static_cast<std::uint64_t>(frame.size()));
  mix(static_cast<std::uint64_t>(frame.spec.samples_per_symbol));
  mix(static_cast<std::uint64_t>(frame.spec.rrc_span_symbols));
  mix(std::bit_cast<std::uint64_t>(frame.spec.rrc_rolloff));
  mix(std::bit_cast<std::uint64_t>(frame.spec.pilot_fraction));
  mix(std::bit_cast<std::uint64_t>(frame.spec.pilot_power_boost_db));
  for (std::size_t i = 0; i < std::min<std::size_t>(frame.spec.pilot_sequence.size(), 8); ++i) {
    mix(std::bit_cast<std::uint64_t>(frame.spec.pilot_sequence[i].real()));
    mix(std::bit_cast<std::uint64_t>(frame.spec.pilot_sequence[i].imag()));
  }
  return h;
}

std::shared_ptr<const ComplexArray> pilot_reference_waveform(const SymbolFrame& frame) {
  static std::mutex cache_mutex;
  static std::map<std::uint64_t, std::shared_ptr<const ComplexArray>> cache;
  const std::uint64_t key = frame_layout_key(frame);
  {
    std::lock_guard<std::mutex> lock(cache_mutex);
    const auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  SymbolFrame pilots_only = frame;
  for (Eigen::Index i = 0; i < frame.size(); ++i)
    if (!frame.pilot_mask[i]) pilots_only.tx_symbols[i] = Complex{0.0, 0.0};
  auto ref = std::make_shared<const ComplexArray>(pulse_shape(pilots_only));
  std::lock_guard<std::mutex> lock(cache_mutex);
  cache[key] = ref;
  if (cache.size() > 16) cache.erase(cache.begin());
  return ref;
}

int pilot_period(const SymbolFrame& frame) {
  return std::max(1, static_cast<int>(std::lround(1.0 / frame.spec.pilot_fraction)));
}

void quantize_inplace(ComplexArray& samples, int bits, double full_scale) {
  if (bits <= 0) return;
  const double levels = static_cast<double>(1 << bits);
  const double step = 2.0 * full_scale / levels;
  for (auto& s : samples) {
    const double i = std::clamp(s.real(), -full_scale, full_scale - step);
    const double q = std::clamp(s.imag(), -full_scale, full_scale - step);
    s = Complex{(std::floor(i / step) + 0.5) * step, (std::floor(q / step) + 0.5) * step};
  }
}

} // namespace

double estimate_cfo(const RxCapture& capture, const SymbolFrame& frame, const DspConfig& cfg) {
  cfg.validate();
  const Eigen::Index n_pilots = frame.pilot_mask.cast<int>().sum();
  if (n_pilots < 1024) throw InsufficientSamples("estimate_cfo: need >= 1024 pilots");

  const auto ref = pilot_reference_waveform(frame);
  const Eigen::Index n = std::min(capture.samples.size(), ref->size());

  // Pilot wipeoff, then box decimation by the oversampling factor before the
  // FFT: the offset peak sits well inside the symbol-rate Nyquist band, so
  // this keeps the bin resolution of a cfo_fft_size transform at the full
  // rate for an eighth of the work.
  const int sps = std::max(1, frame.spec.samples_per_symbol);
  const double fs_dec = capture.sample_rate / sps;
  if (cfg.cfo_search_range_hz > 0.45 * fs_dec)
    throw ConfigError("estimate_cfo: search range exceeds the symbol-rate Nyquist band");
  const Eigen::Index n_dec = (n + sps - 1) / sps;
  int nfft = std::max(1024, cfg.cfo_fft_size / sps);
  while (nfft < n_dec) nfft *= 2;

  std::vector<Complex> z(static_cast<std::size_t>(nfft), Complex{0.0, 0.0});
  for (Eigen::Index k = 0; k < n; ++k)
    z[static_cast<std::size_t>(k / sps)] += capture.samples[k] * std::conj((*ref)[k]);

  Eigen::FFT<double> fft;
  std::vector<Complex> spectrum;
  fft.fwd(spectrum, z);

  const double bin_hz = fs_dec / nfft;
  const auto bin_of = [&](int idx) { // signed frequency of FFT bin
    return idx <= nfft / 2 ? idx * bin_hz : (idx - nfft) * bin_hz;
  };

  // Peak of the power spectrum restricted to the search range.
  int best_bin = -1;
  double best_power = 0.0;
  for (int idx = 0; idx < nfft; ++idx) {
    if (std::abs(bin_of(idx)) > cfg.cfo_search_range_hz) continue;
    const double p = std::norm(spectrum[idx]);
    if (p > best_power) {
      best_power = p;
      best_bin = idx;
    }
  }
  if (best_bin < 0) throw TimingNotFound("estimate_cfo: empty search range");
  if (!(best_power > 0.0)) throw TimingNotFound("estimate_cfo: no spectral peak");

  // Secondary-peak ambiguity check. The exclusion zone covers the signal's
  // own lobe: the reciprocal capture length plus a generous allowance for
  // linewidth broadening of the pilot tone.
  const double lobe_hz =
      std::max(4.0 * fs_dec / static_cast<double>(std::max<Eigen::Index>(n_dec, 1)), 5e5);
  const int lobe = std::max(4, static_cast<int>(lobe_hz / bin_hz));
  double second_power = 0.0;
  for (int idx = 0; idx < nfft; ++idx) {
    const double f = bin_of(idx);
    if (std::abs(f) > cfg.cfo_search_range_hz) continue;
    int d = std::abs(idx - best_bin);
    d = std::min(d, nfft - d);
    if (d <= lobe) continue;
    second_power = std::max(second_power, std::norm(spectrum[idx]));
  }
  if (second_power > best_power * std::pow(10.0, -0.1))
    throw AmbiguousPeak("estimate_cfo: two spectral peaks within 1 dB");

  // Quadratic interpolation around the peak bin.
  const auto wrap = [&](int idx) { return ((idx % nfft) + nfft) % nfft; };
  const double pm = std::norm(spectrum[wrap(best_bin - 1)]);
  const double pp = std::norm(spectrum[wrap(best_bin + 1)]);
  const double denom = pm - 2.0 * best_power + pp;
  const double delta = std::abs(denom) > 0.0 ? 0.5 * (pm - pp) / denom : 0.0;
  return bin_of(best_bin) + std::clamp(delta, -0.5, 0.5) * bin_hz;
}

RxCapture compensate_cfo(const RxCapture& capture, double cfo_hz) {
  RxCapture out = capture;
  const double w = -2.0 * M_PI * cfo_hz / capture.sample_rate;
  const Complex step{std::cos(w), std::sin(w)};
  Complex rot{1.0, 0.0};
  // Complex recurrence with periodic exact re-anchoring: rounding drift of
  // the running product stays below 1e-13 phase.
  for (Eigen::Index k = 0; k < out.samples.size(); ++k) {
    if (k % 256 == 0) {
      const double a = w * static_cast<double>(k);
      rot = Complex{std::cos(a), std::sin(a)};
    }
    out.samples[k] *= rot;
    rot *= step;
  }
  return out;
}

ComplexArray matched_filter_downsample(const RxCapture& capture, const SymbolFrame& frame) {
  const FrameSpec& spec = frame.spec;
  spec.validate();
  const int sps = spec.samples_per_symbol;
  if (std::abs(capture.sample_rate / spec.symbol_rate - sps) > 1e-9)
    throw ConfigError("matched filter: sample rate is not an integer multiple of symbol rate");

  const ComplexArray snu = to_snu(capture.samples, capture.cal);
  const RealArray taps = rrc_taps(sps, spec.rrc_rolloff, spec.rrc_span_symbols);

  // Matched-filter outputs are only needed at candidate symbol sampling
  // points, so evaluate the filter there directly instead of convolving the
  // whole capture. The RRC is symmetric, which lets the correlation run
  // forward over a contiguous segment; I and Q split into real dot products
  // that vectorize well.
  const Eigen::Index nx = snu.size();
  const Eigen::Index nt = taps.size();
  RealArray re(nx), im(nx);
  for (Eigen::Index k = 0; k < nx; ++k) {
    re[k] = snu[k].real();
    im[k] = snu[k].imag();
  }
  const auto filtered_at = [&](Eigen::Index m) -> Complex {
    const Eigen::Index lo = m - nt + 1;
    const Eigen::Index a = std::max<Eigen::Index>(lo, 0);
    const Eigen::Index b = std::min<Eigen::Index>(m + 1, nx);
    if (a >= b) return {0.0, 0.0};
    const Eigen::Index len = b - a;
    const Eigen::Index ta = a - lo;
    return {taps.matrix().segment(ta, len).dot(re.matrix().segment(a, len)),
            taps.matrix().segment(ta, len).dot(im.matrix().segment(a, len))};
  };

  const Eigen::Index group_delay = nt - 1; // tx filter + matched filter
  const Eigen::Index n_symbols = frame.size();
  const int n_shifts = sps * pilot_period(frame);

  // Pilot-correlation timing metric over sampling phases and pilot alignments.
  std::vector<Eigen::Index> pilot_positions;
  for (Eigen::Index i = 0; i < n_symbols && pilot_positions.size() < 4096; ++i)
    if (frame.pilot_mask[i]) pilot_positions.push_back(i);
  if (pilot_positions.empty()) throw ConfigError("matched filter: frame has no pilots");

  std::vector<double> metric(n_shifts, 0.0);
  double best = 0.0;
  int best_shift = 0;
  for (int d = 0; d < n_shifts; ++d) {
    Complex corr{0.0, 0.0};
    for (const Eigen::Index p : pilot_positions) {
      const Eigen::Index idx = p * sps + group_delay + d;
      if (idx >= nx + nt - 1) break;
      corr += filtered_at(idx) * std::conj(frame.tx_symbols[p]);
    }
    metric[d] = std::norm(corr);
    if (metric[d] > best) {
      best = metric[d];
      best_shift = d;
    }
  }
  // Compare the peak against the correlation floor: candidates at least one
  // symbol away, where the pulse tails no longer contribute.
  double floor_sum = 0.0;
  int floor_count = 0;
  for (int d = 0; d < n_shifts; ++d) {
    if (std::abs(d - best_shift) < sps) continue;
    floor_sum += metric[d];
    ++floor_count;
  }
  const double floor_mean =
      floor_count > 0 ? floor_sum / floor_count
                      : std::accumulate(metric.begin(), metric.end(), 0.0) / n_shifts;
  if (!(best > 0.0) || best < 3.0 * floor_mean)
    throw TimingNotFound("matched filter: pilot correlation peak below 3x mean floor");

  ComplexArray symbols(n_symbols);
  for (Eigen::Index i = 0; i < n_symbols; ++i)
    symbols[i] = filtered_at(i * sps + group_delay + best_shift);
  return symbols;
}

ComplexArray equalize(const ComplexArray& symbols, const SymbolFrame& frame,
                      const DspConfig& cfg, EqualizerDiagnostics* diagnostics) {
  cfg.validate();
  const int taps = cfg.equalizer_taps;
  const int half = taps / 2;
  const Eigen::Index n = std::min<Eigen::Index>(symbols.size(), frame.size());

  // Training targets are scaled onto the received carrier: a local complex
  // gain (bulk attenuation plus smoothed pilot phase) is fitted per pilot
  // window, and the taps adapt against g*x instead of x. The equalizer then
  // models only deviations from the flat channel; it neither inverts the
  // channel gain (which would wreck the SNU calibration) nor chases the
  // laser phase walk (which would smear the tap average). Full phase
  // recovery still runs after equalization.
  std::vector<Eigen::Index> pilots;
  std::vector<Complex> rotors;
  std::vector<double> powers;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!frame.pilot_mask[i]) continue;
    pilots.push_back(i);
    rotors.push_back(symbols[i] * std::conj(frame.tx_symbols[i]));
    powers.push_back(std::norm(frame.tx_symbols[i]));
  }
  std::vector<Complex> pilot_gain(pilots.size(), Complex{1.0, 0.0});
  {
    const auto np = static_cast<Eigen::Index>(pilots.size());
    std::vector<Complex> prefix(np + 1, Complex{0.0, 0.0});
    std::vector<double> prefix_pwr(np + 1, 0.0);
    for (Eigen::Index i = 0; i < np; ++i) {
      prefix[i + 1] = prefix[i] + rotors[i];
      prefix_pwr[i + 1] = prefix_pwr[i] + powers[i];
    }
    const int w_ph = cfg.phase_pilot_window;
    for (Eigen::Index i = 0; i < np; ++i) {
      const Eigen::Index lo = std::max<Eigen::Index>(0, i - w_ph / 2);
      const Eigen::Index hi = std::min<Eigen::Index>(np, lo + w_ph);
      const Eigen::Index lo2 = std::max<Eigen::Index>(0, hi - w_ph);
      const Complex avg = prefix[hi] - prefix[lo2];
      const double pwr = prefix_pwr[hi] - prefix_pwr[lo2];
      if (pwr > 0.0 && std::abs(avg) > 0.0) pilot_gain[i] = avg / pwr;
    }
  }

  Eigen::VectorXcd w = Eigen::VectorXcd::Zero(taps);
  w[half] = 1.0; // identity start

  const auto window_at = [&](Eigen::Index center) {
    Eigen::VectorXcd u(taps);
    for (int k = 0; k < taps; ++k) {
      const Eigen::Index idx = center + half - k;
      u[k] = (idx >= 0 && idx < n) ? symbols[idx] : Complex{0.0, 0.0};
    }
    return u;
  };

  Eigen::VectorXcd w_sum = Eigen::VectorXcd::Zero(taps);
  Eigen::Index n_avg = 0;
  Eigen::Index n_updates = 0;
  const auto total_pilots = static_cast<Eigen::Index>(pilots.size());
  const Eigen::Index burn_in = total_pilots / 2;

  double err_acc = 0.0;
  Eigen::Index err_count = 0;
  const Eigen::Index err_chunk = std::max<Eigen::Index>(1, total_pilots / 8);
  if (cfg.equalizer_step > 0.0) {
    for (std::size_t k = 0; k < pilots.size(); ++k) {
      const Eigen::Index i = pilots[k];
      const Eigen::VectorXcd u = window_at(i);
      const Complex y = w.dot(u); // Eigen dot conjugates the first factor: w^H u
      const Complex e = frame.tx_symbols[i] * pilot_gain[k] - y;
      if (!std::isfinite(std::norm(e)) || std::norm(e) > 1e12)
        throw Diverged("equalizer error exploded during adaptation");
      if (diagnostics) {
        err_acc += std::norm(e);
        if (++err_count == err_chunk) {
          diagnostics->error_trailing_avg.push_back(err_acc / err_count);
          err_acc = 0.0;
          err_count = 0;
        }
      }
      const double energy = u.squaredNorm() + 1e-12;
      w += (cfg.equalizer_step / energy) * std::conj(e) * u;
      ++n_updates;
      if (n_updates > burn_in) {
        w_sum += w;
        ++n_avg;
      }
    }
    if (n_avg > 0) w = w_sum / static_cast<double>(n_avg);
    // Unit noise gain: a pilot-directed equalizer otherwise converges toward
    // the Wiener gain ~1/t and silently rescales the shot-noise calibration.
    const double norm = w.norm();
    if (norm > 0.0) w /= norm;
  }

  ComplexArray out(symbols.size());
  for (Eigen::Index i = 0; i < n; ++i) out[i] = w.dot(window_at(i));
  for (Eigen::Index i = n; i < symbols.size(); ++i) out[i] = symbols[i];

  const double in_power = symbols.abs2().mean();
  const double out_power = out.abs2().mean();
  if (out_power > 10.0 * in_power && in_power > 0.0)
    throw Diverged("equalizer output power exceeds 10x input power");
  return out;
}

RecoveredBlock phase_recover(const ComplexArray& symbols, const SymbolFrame& frame,
                             const DspConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = std::min<Eigen::Index>(symbols.size(), frame.size());

  std::vector<Eigen::Index> pilot_pos;
  std::vector<Complex> rot;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!frame.pilot_mask[i]) continue;
    pilot_pos.push_back(i);
    rot.push_back(symbols[i] * std::conj(frame.tx_symbols[i]));
  }
  const auto np = static_cast<Eigen::Index>(pilot_pos.size());
  if (np < 2) throw ConfigError("phase_recover: need at least 2 pilots");

  // Centered complex moving average, then unwrap the smoothed angles.
  const int w = cfg.phase_pilot_window;
  std::vector<double> theta(np);
  {
    // Prefix sums for O(1) windows.
    std::vector<Complex> prefix(np + 1, Complex{0.0, 0.0});
    for (Eigen::Index i = 0; i < np; ++i) prefix[i + 1] = prefix[i] + rot[i];
    for (Eigen::Index i = 0; i < np; ++i) {
      const Eigen::Index lo = std::max<Eigen::Index>(0, i - w / 2);
      const Eigen::Index hi = std::min<Eigen::Index>(np, lo + w);
      const Complex avg = prefix[hi] - prefix[std::max<Eigen::Index>(0, hi - w)];
      theta[i] = std::arg(avg);
    }
    for (Eigen::Index i = 1; i < np; ++i) {
      double d = theta[i] - theta[i - 1];
      while (d > M_PI) d -= 2.0 * M_PI;
      while (d < -M_PI) d += 2.0 * M_PI;
      theta[i] = theta[i - 1] + d;
    }
  }

  // Linear interpolation of the pilot-grid phase onto every symbol.
  ComplexArray derotated(n);
  Eigen::Index seg = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    while (seg + 1 < np && pilot_pos[seg + 1] < i) ++seg;
    double phase;
    if (i <= pilot_pos.front())
      phase = theta.front();
    else if (i >= pilot_pos.back())
      phase = theta.back();
    else {
      const Eigen::Index a = pilot_pos[seg], b = pilot_pos[seg + 1];
      const double t = static_cast<double>(i - a) / static_cast<double>(b - a);
      phase = theta[seg] + t * (theta[seg + 1] - theta[seg]);
    }
    derotated[i] = symbols[i] * Complex{std::cos(-phase), std::sin(-phase)};
  }

  RecoveredBlock block;
  block.block_length = n;
  Complex mean_rot{0.0, 0.0};
  for (const auto& r : rot) mean_rot += r;
  block.mean_phase_error_rad = std::arg(mean_rot);

  Eigen::Index n_data = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (!frame.pilot_mask[i]) ++n_data;
  block.tx_data_symbols.resize(n_data);
  block.rx_data_symbols.resize(n_data);
  Eigen::Index j = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (frame.pilot_mask[i]) continue;
    block.tx_data_symbols[j] = frame.tx_symbols[i];
    block.rx_data_symbols[j] = derotated[i];
    ++j;
  }
  return block;
}

RecoveredBlock process_block(const RxCapture& capture, const SymbolFrame& frame,
                             const DspConfig& cfg) {
  RxCapture work = capture;
  if (cfg.adc_bits > 0 && cfg.adc_full_scale > 0.0)
    quantize_inplace(work.samples, cfg.adc_bits, cfg.adc_full_scale);

  const double cfo = estimate_cfo(work, frame, cfg);
  work = compensate_cfo(work, cfo);
  const ComplexArray symbols = matched_filter_downsample(work, frame);
  const ComplexArray equalized = equalize(symbols, frame, cfg);
  RecoveredBlock block = phase_recover(equalized, frame, cfg);
  block.residual_cfo_hz = cfo;
  return block;
}

} // namespace cvqkd
