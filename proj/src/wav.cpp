#include "sgm/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

namespace sgm {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<unsigned char>((v >> shift) & 0xFF));
}

void put_tag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

struct Format {
  std::uint16_t tag = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

double decode_sample(const unsigned char* p, const Format& fmt) {
  if (fmt.tag == kFormatFloat) {
    float f;
    std::uint32_t raw = read_u32(p);
    std::memcpy(&f, &raw, sizeof f);
    return static_cast<double>(f);
  }
  if (fmt.bits == 16) {
    return static_cast<std::int16_t>(read_u16(p)) / 32768.0;
  }
  std::int32_t v = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
  if (v & 0x800000) v -= 0x1000000;
  return v / 8388608.0;
}

}  // namespace

SampleStream read_audio(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  const std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  if (data.size() < 12 || std::memcmp(data.data(), "RIFF", 4) != 0 ||
      std::memcmp(data.data() + 8, "WAVE", 4) != 0) {
    throw Error(ErrorCode::UnsupportedFormat, path.string() + " is not a RIFF/WAVE file");
  }

  Format fmt;
  bool have_format = false;
  const unsigned char* samples = nullptr;
  std::size_t sample_bytes = 0;
  std::size_t pos = 12;
  while (pos + 8 <= data.size()) {
    const unsigned char* chunk = data.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > data.size()) {
      // A truncated data chunk is corrupt; anything else trailing is ignored.
      if (std::memcmp(chunk, "data", 4) == 0) {
        throw Error(ErrorCode::CorruptFile, path.string() + ": truncated data chunk");
      }
      break;
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw Error(ErrorCode::CorruptFile, path.string() + ": short fmt chunk");
      const unsigned char* f = data.data() + body;
      fmt.tag = read_u16(f);
      fmt.channels = read_u16(f + 2);
      fmt.sample_rate = read_u32(f + 4);
      fmt.block_align = read_u16(f + 12);
      fmt.bits = read_u16(f + 14);
      if (fmt.tag == kFormatExtensible) {
        if (size < 40) throw Error(ErrorCode::CorruptFile, path.string() + ": short extensible fmt");
        fmt.tag = read_u16(f + 24);
      }
      have_format = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      samples = data.data() + body;
      sample_bytes = size;
    }
    pos = body + size + (size & 1);
  }
  if (!have_format || samples == nullptr) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": missing fmt or data chunk");
  }

  const bool pcm = fmt.tag == kFormatPcm && (fmt.bits == 16 || fmt.bits == 24);
  const bool flt = fmt.tag == kFormatFloat && fmt.bits == 32;
  if (!pcm && !flt) {
    throw Error(ErrorCode::UnsupportedFormat,
                path.string() + ": only PCM16, PCM24 and float32 are supported");
  }
  if (fmt.channels != 1 && fmt.channels != 2) {
    throw Error(ErrorCode::UnsupportedFormat, path.string() + ": only mono or stereo");
  }
  const std::size_t width = fmt.bits / 8;
  if (fmt.block_align != width * fmt.channels || fmt.sample_rate == 0 ||
      fmt.sample_rate > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": inconsistent fmt chunk");
  }

  const std::size_t frames = sample_bytes / fmt.block_align;
  SampleStream stream;
  stream.sample_rate = static_cast<int>(fmt.sample_rate);
  stream.label = path.filename().string();
  stream.samples.resize(static_cast<Eigen::Index>(frames));
  for (std::size_t i = 0; i < frames; ++i) {
    const unsigned char* frame = samples + i * fmt.block_align;
    double v = decode_sample(frame, fmt);
    if (fmt.channels == 2) v = 0.5 * (v + decode_sample(frame + width, fmt));
    stream.samples[static_cast<Eigen::Index>(i)] = v;
  }
  if (!stream.samples.allFinite()) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": non-finite samples");
  }
  return stream;
}

void write_audio(const std::filesystem::path& path, const SampleStream& stream,
                 WavEncoding encoding) {
  validate(stream);
  const std::uint16_t bits = encoding == WavEncoding::Pcm16 ? 16 : encoding == WavEncoding::Pcm24 ? 24 : 32;
  const std::uint16_t tag = encoding == WavEncoding::Float32 ? kFormatFloat : kFormatPcm;
  const std::uint16_t width = bits / 8;
  const auto frames = static_cast<std::uint64_t>(stream.length());
  const std::uint64_t data_bytes = frames * width;
  if (data_bytes + 36 > 0xFFFFFFFFULL) {
    throw Error(ErrorCode::InvalidArgument, "stream too long for a RIFF file");
  }

  std::vector<unsigned char> out;
  out.reserve(static_cast<std::size_t>(data_bytes) + 44);
  put_tag(out, "RIFF");
  put_u32(out, static_cast<std::uint32_t>(36 + data_bytes));
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, tag);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(stream.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(stream.sample_rate) * width);
  put_u16(out, width);
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, static_cast<std::uint32_t>(data_bytes));

  for (Eigen::Index i = 0; i < stream.length(); ++i) {
    const double v = stream.samples[i];
    if (encoding == WavEncoding::Float32) {
      const float f = static_cast<float>(v);
      std::uint32_t raw;
      std::memcpy(&raw, &f, sizeof raw);
      put_u32(out, raw);
    } else if (encoding == WavEncoding::Pcm16) {
      const double q = std::clamp(std::nearbyint(v * 32768.0), -32768.0, 32767.0);
      put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    } else {
      const double q = std::clamp(std::nearbyint(v * 8388608.0), -8388608.0, 8388607.0);
      const auto raw = static_cast<std::uint32_t>(static_cast<std::int32_t>(q));
      out.push_back(static_cast<unsigned char>(raw & 0xFF));
      out.push_back(static_cast<unsigned char>((raw >> 8) & 0xFF));
      out.push_back(static_cast<unsigned char>((raw >> 16) & 0xFF));
    }
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace sgm
