#pragma once

#include "cvqkd/types.hpp"

#include <string>

namespace cvqkd {

// Binary IQ capture format, little-endian:
//   32-byte header { magic "CVQK", version u32, sample_rate f64, count u64,
//                    reserved u64 }
// followed by count interleaved (float32 I, float32 Q) pairs.
struct IqCapture {
  double sample_rate = 0.0;
  ComplexArray samples;
};

void write_iq(const std::string& path, const ComplexArray& samples, double sample_rate);
IqCapture read_iq(const std::string& path);

} // namespace cvqkd
