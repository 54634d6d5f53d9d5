#pragma once

// Multichannel sample buffers and RIFF/WAVE file I/O.
//
// Reading accepts integer PCM (8/16/24/32 bit) and IEEE float (32/64 bit),
// including WAVE_FORMAT_EXTENSIBLE headers. Writing always produces 32-bit
// float, interleaved.

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "lstsc/error.hpp"

namespace lstsc {

// Processing entry points run at this rate only.
inline constexpr int kPipelineSampleRate = 16000;

class MultichannelAudio {
 public:
  MultichannelAudio() = default;

  MultichannelAudio(int sample_rate, int channels, std::size_t frames)
      : sample_rate_(sample_rate),
        data_(static_cast<std::size_t>(channels), std::vector<double>(frames, 0.0)) {
    detail::require(sample_rate > 0, "sample rate must be positive");
    detail::require(channels >= 1, "audio needs at least one channel");
  }

  MultichannelAudio(int sample_rate, std::vector<std::vector<double>> channels)
      : sample_rate_(sample_rate), data_(std::move(channels)) {
    detail::require(sample_rate > 0, "sample rate must be positive");
    detail::require(!data_.empty(), "audio needs at least one channel");
    for (const auto& ch : data_) {
      detail::require(ch.size() == data_.front().size(),
                      "all channels must have equal length");
    }
  }

  int sample_rate() const { return sample_rate_; }
  int channels() const { return static_cast<int>(data_.size()); }
  std::size_t frames() const { return data_.empty() ? 0 : data_.front().size(); }

  std::span<double> channel(int m) { return data_.at(static_cast<std::size_t>(m)); }
  std::span<const double> channel(int m) const {
    return data_.at(static_cast<std::size_t>(m));
  }
  const std::vector<std::vector<double>>& channel_data() const { return data_; }

  friend bool operator==(const MultichannelAudio&, const MultichannelAudio&) = default;

 private:
  int sample_rate_ = kPipelineSampleRate;
  std::vector<std::vector<double>> data_;
};

inline void require_pipeline_rate(const MultichannelAudio& audio) {
  if (audio.sample_rate() != kPipelineSampleRate) {
    detail::fail(ErrorKind::kInvalidArgument,
                 "expected " + std::to_string(kPipelineSampleRate) +
                     " Hz input, got " + std::to_string(audio.sample_rate()) + " Hz");
  }
}

namespace detail {

inline std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

inline void put_tag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    fail(ErrorKind::kIo, "file not found: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path,
                       std::span<const unsigned char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::kIo, "write failed for " + path.string());
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

inline double decode_sample(const unsigned char* p, std::uint16_t format, int bits) {
  if (format == kFormatFloat) {
    if (bits == 32) {
      std::uint32_t u = read_u32(p);
      float f;
      std::memcpy(&f, &u, sizeof f);
      return f;
    }
    std::uint64_t u = static_cast<std::uint64_t>(read_u32(p)) |
                      (static_cast<std::uint64_t>(read_u32(p + 4)) << 32);
    double d;
    std::memcpy(&d, &u, sizeof d);
    return d;
  }
  switch (bits) {
    case 8:
      return (static_cast<int>(p[0]) - 128) / 128.0;
    case 16:
      return static_cast<std::int16_t>(read_u16(p)) / 32768.0;
    case 24: {
      std::int32_t v = static_cast<std::int32_t>(
          (static_cast<std::uint32_t>(p[0]) << 8) | (static_cast<std::uint32_t>(p[1]) << 16) |
          (static_cast<std::uint32_t>(p[2]) << 24));
      return (v >> 8) / 8388608.0;
    }
    default:
      return static_cast<std::int32_t>(read_u32(p)) / 2147483648.0;
  }
}

}  // namespace detail

inline MultichannelAudio load_wav(const std::filesystem::path& path) {
  using detail::fail;
  const std::vector<unsigned char> bytes = detail::read_file(path);
  const std::string name = path.string();
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    fail(ErrorKind::kFormat, "not a RIFF/WAVE file: " + name);
  }

  std::uint16_t format = 0;
  int channels = 0;
  int rate = 0;
  int bits = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::size_t size = detail::read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t available = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || size > available) fail(ErrorKind::kFormat, "bad fmt chunk in " + name);
      const unsigned char* f = bytes.data() + body;
      format = detail::read_u16(f);
      channels = detail::read_u16(f + 2);
      rate = static_cast<int>(detail::read_u32(f + 4));
      bits = detail::read_u16(f + 14);
      if (format == detail::kFormatExtensible) {
        if (size < 40) fail(ErrorKind::kFormat, "truncated extensible fmt in " + name);
        format = detail::read_u16(f + 24);
      }
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      // Some writers leave the size field unset when streaming.
      data_size = std::min(size, available);
    }
    pos = body + size + (size & 1);
  }

  if (channels == 0) fail(ErrorKind::kFormat, "missing fmt chunk in " + name);
  if (data == nullptr) fail(ErrorKind::kFormat, "missing data chunk in " + name);
  if (rate <= 0) fail(ErrorKind::kFormat, "invalid sample rate in " + name);
  const bool pcm_ok = format == detail::kFormatPcm &&
                      (bits == 8 || bits == 16 || bits == 24 || bits == 32);
  const bool float_ok = format == detail::kFormatFloat && (bits == 32 || bits == 64);
  if (!pcm_ok && !float_ok) {
    fail(ErrorKind::kFormat, "unsupported encoding (format " + std::to_string(format) +
                                 ", " + std::to_string(bits) + " bit) in " + name);
  }

  const std::size_t stride = static_cast<std::size_t>(bits / 8) * channels;
  const std::size_t frames = data_size / stride;
  MultichannelAudio audio(rate, channels, frames);
  for (std::size_t t = 0; t < frames; ++t) {
    for (int m = 0; m < channels; ++m) {
      audio.channel(m)[t] =
          detail::decode_sample(data + t * stride + static_cast<std::size_t>(m) * (bits / 8),
                                format, bits);
    }
  }
  return audio;
}

inline void save_wav(const std::filesystem::path& path, const MultichannelAudio& audio) {
  const auto channels = static_cast<std::uint32_t>(audio.channels());
  const auto frames = audio.frames();
  const std::uint64_t data_size = static_cast<std::uint64_t>(frames) * channels * 4;
  if (data_size > 0xFFFFFFFFull - 36) {
    detail::fail(ErrorKind::kInvalidArgument, "audio too long for a RIFF file");
  }

  std::vector<unsigned char> out;
  out.reserve(44 + data_size);
  detail::put_tag(out, "RIFF");
  detail::put_u32(out, static_cast<std::uint32_t>(36 + data_size));
  detail::put_tag(out, "WAVE");
  detail::put_tag(out, "fmt ");
  detail::put_u32(out, 16);
  detail::put_u16(out, detail::kFormatFloat);
  detail::put_u16(out, static_cast<std::uint16_t>(channels));
  detail::put_u32(out, static_cast<std::uint32_t>(audio.sample_rate()));
  detail::put_u32(out, static_cast<std::uint32_t>(audio.sample_rate()) * channels * 4);
  detail::put_u16(out, static_cast<std::uint16_t>(channels * 4));
  detail::put_u16(out, 32);
  detail::put_tag(out, "data");
  detail::put_u32(out, static_cast<std::uint32_t>(data_size));
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::uint32_t m = 0; m < channels; ++m) {
      const float f = static_cast<float>(audio.channel(static_cast<int>(m))[t]);
      std::uint32_t u;
      std::memcpy(&u, &f, sizeof u);
      detail::put_u32(out, u);
    }
  }
  detail::write_file(path, out);
}

}  // namespace lstsc
