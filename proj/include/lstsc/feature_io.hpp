#pragma once

// Feature containers on disk.
//
// Binary layout (little-endian):
//   bytes 0..3   magic "LSTS"
//   u32          version (1)
//   u32 x 3      frames L, bins K (F or B), planes P
//   f32 x P*L*K  planes, each row-major L x K, in the order they were written
//
// Feature files carry four planes: gamma_local, gamma_global,
// warped_global, lambda. Mask dumps use the same container with one plane.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "lstsc/audio.hpp"
#include "lstsc/coherence.hpp"
#include "lstsc/erb.hpp"
#include "lstsc/error.hpp"

namespace lstsc {

inline constexpr std::uint32_t kLstsVersion = 1;

struct FeatureFile {
  std::uint32_t frames = 0;
  std::uint32_t bins = 0;
  std::vector<std::vector<float>> planes;

  std::uint32_t plane_count() const { return static_cast<std::uint32_t>(planes.size()); }
};

inline std::vector<unsigned char> encode_lsts(const FeatureFile& file) {
  std::vector<unsigned char> out;
  const std::size_t plane_size = static_cast<std::size_t>(file.frames) * file.bins;
  out.reserve(20 + 4 * plane_size * file.planes.size());
  detail::put_tag(out, "LSTS");
  detail::put_u32(out, kLstsVersion);
  detail::put_u32(out, file.frames);
  detail::put_u32(out, file.bins);
  detail::put_u32(out, file.plane_count());
  for (const auto& plane : file.planes) {
    detail::require(plane.size() == plane_size, "feature plane does not match header dims");
    for (float v : plane) {
      std::uint32_t u;
      std::memcpy(&u, &v, sizeof u);
      detail::put_u32(out, u);
    }
  }
  return out;
}

inline FeatureFile decode_lsts(std::span<const unsigned char> bytes) {
  if (bytes.size() < 20 || std::memcmp(bytes.data(), "LSTS", 4) != 0) {
    detail::fail(ErrorKind::kFormat, "not an LSTS feature file");
  }
  const std::uint32_t version = detail::read_u32(bytes.data() + 4);
  if (version != kLstsVersion) {
    detail::fail(ErrorKind::kFormat, "unsupported LSTS version " + std::to_string(version));
  }
  FeatureFile file;
  file.frames = detail::read_u32(bytes.data() + 8);
  file.bins = detail::read_u32(bytes.data() + 12);
  const std::uint32_t planes = detail::read_u32(bytes.data() + 16);
  const std::size_t plane_size = static_cast<std::size_t>(file.frames) * file.bins;
  if (bytes.size() != 20 + 4 * plane_size * planes) {
    detail::fail(ErrorKind::kFormat, "LSTS payload size does not match header");
  }
  const unsigned char* p = bytes.data() + 20;
  file.planes.assign(planes, std::vector<float>(plane_size));
  for (auto& plane : file.planes) {
    for (float& v : plane) {
      const std::uint32_t u = detail::read_u32(p);
      std::memcpy(&v, &u, sizeof v);
      p += 4;
    }
  }
  return file;
}

inline FeatureFile to_feature_file(const LstscFeatures& features) {
  const auto narrow = [](const std::vector<double>& v) {
    return std::vector<float>(v.begin(), v.end());
  };
  FeatureFile file;
  file.frames = static_cast<std::uint32_t>(features.frames);
  file.bins = static_cast<std::uint32_t>(features.bins);
  file.planes = {narrow(features.gamma_local), narrow(features.gamma_global),
                 narrow(features.warped_global), narrow(features.lambda)};
  return file;
}

inline FeatureFile to_feature_file(const Mask& mask) {
  FeatureFile file;
  file.frames = static_cast<std::uint32_t>(mask.frames());
  file.bins = static_cast<std::uint32_t>(mask.bins());
  file.planes = {std::vector<float>(mask.data().begin(), mask.data().end())};
  return file;
}

inline void write_lsts(const std::filesystem::path& path, const FeatureFile& file) {
  detail::write_file(path, encode_lsts(file));
}

inline FeatureFile read_lsts(const std::filesystem::path& path) {
  return decode_lsts(detail::read_file(path));
}

namespace detail {
inline void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::span<const unsigned char>(
                       reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}
}  // namespace detail

// Long format, one row per (frame, bin), for plotting.
inline std::string features_csv(const LstscFeatures& features) {
  std::ostringstream os;
  os << std::setprecision(9);
  os << "frame,bin,gamma_local,gamma_global,warped_local,warped_global,lambda\n";
  for (int l = 0; l < features.frames; ++l) {
    for (int k = 0; k < features.bins; ++k) {
      const std::size_t i = features.index(l, k);
      os << l << ',' << k << ',' << features.gamma_local[i] << ',' << features.gamma_global[i]
         << ',' << features.warped_local[i] << ',' << features.warped_global[i] << ','
         << features.lambda[i] << '\n';
    }
  }
  return os.str();
}

inline void write_features_csv(const std::filesystem::path& path, const LstscFeatures& features) {
  detail::write_text(path, features_csv(features));
}

// One row per band: center, support and the nonzero weights as bin:weight.
inline std::string filterbank_csv(const ErbFilterbank& fb) {
  std::ostringstream os;
  os << std::setprecision(9);
  os << "band,center_hz,first_bin,last_bin,norm,weights\n";
  for (int b = 0; b < fb.bands(); ++b) {
    const auto& s = fb.support(b);
    os << b << ',' << fb.centers()[b] << ',' << s.first << ',' << s.last << ',' << fb.norm(b)
       << ',';
    for (int f = s.first; f <= s.last; ++f) {
      if (f > s.first) os << ' ';
      os << f << ':' << fb.weight(b, f);
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace lstsc
