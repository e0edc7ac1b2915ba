#include "cvqkd/iq_io.hpp"

#include "cvqkd/errors.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace cvqkd {

namespace {

constexpr char kMagic[4] = {'C', 'V', 'Q', 'K'};
constexpr std::uint32_t kVersion = 1;

#pragma pack(push, 1)
struct Header {
  char magic[4];
  std::uint32_t version;
  double sample_rate;
  std::uint64_t count;
  std::uint64_t reserved;
};
#pragma pack(pop)
static_assert(sizeof(Header) == 32);

} // namespace

void write_iq(const std::string& path, const ComplexArray& samples, double sample_rate) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open IQ file for writing: " + path);

  Header h{};
  std::memcpy(h.magic, kMagic, 4);
  h.version = kVersion;
  h.sample_rate = sample_rate;
  h.count = static_cast<std::uint64_t>(samples.size());
  h.reserved = 0;
  out.write(reinterpret_cast<const char*>(&h), sizeof(h));

  std::vector<float> buf(2 * static_cast<std::size_t>(samples.size()));
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    buf[2 * i] = static_cast<float>(samples[i].real());
    buf[2 * i + 1] = static_cast<float>(samples[i].imag());
  }
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!out) throw ConfigError("short write to IQ file: " + path);
}

IqCapture read_iq(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open IQ file: " + path);

  Header h{};
  in.read(reinterpret_cast<char*>(&h), sizeof(h));
  if (!in || std::memcmp(h.magic, kMagic, 4) != 0)
    throw ConfigError("not a CVQK IQ file: " + path);
  if (h.version != kVersion)
    throw ConfigError("unsupported IQ file version in " + path);

  IqCapture cap;
  cap.sample_rate = h.sample_rate;
  cap.samples.resize(static_cast<Eigen::Index>(h.count));
  std::vector<float> buf(2 * static_cast<std::size_t>(h.count));
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!in) throw ConfigError("truncated IQ file: " + path);
  for (std::uint64_t i = 0; i < h.count; ++i)
    cap.samples[static_cast<Eigen::Index>(i)] = Complex{buf[2 * i], buf[2 * i + 1]};
  return cap;
}

} // namespace cvqkd
