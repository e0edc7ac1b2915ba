#pragma once

#include "cvqkd/types.hpp"

namespace cvqkd {

// Root-raised-cosine taps at `samples_per_symbol` oversampling, truncated to
// +/- span_symbols and normalized to unit energy (sum of squares = 1). With
// that normalization the tx-filter / matched-filter pair has unit symbol gain
// and maps white per-sample noise variance 1:1 onto per-symbol variance.
RealArray rrc_taps(int samples_per_symbol, double rolloff, int span_symbols);

/// Full linear convolution of a complex sequence with real taps.
ComplexArray convolve(const ComplexArray& x, const RealArray& taps);

/// Upsample symbols by an integer factor and apply the interpolation filter
/// in one pass (polyphase; avoids multiplying by inserted zeros).
ComplexArray upsample_filter(const ComplexArray& symbols, const RealArray& taps, int factor);

} // namespace cvqkd
