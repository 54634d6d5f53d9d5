#pragma once

// Shoebox acoustics: image-source RIRs, reverberation-time measurement,
// random scene layouts and reverberant mixing at a requested SIR/SNR.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "lstsc/audio.hpp"
#include "lstsc/error.hpp"

namespace lstsc {

inline constexpr double kSpeedOfSound = 343.0;

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double norm(Vec3 v) { return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z); }
inline double distance(Vec3 a, Vec3 b) { return norm(a - b); }

// kImageDecay picks the wall reflection coefficient so that the predicted
// Schroeder decay of the image lattice itself has the requested T60; Sabine
// and Eyring are kept for comparison.
enum class AbsorptionModel { kImageDecay, kSabine, kEyring };

// Box room [0, dims.x] x [0, dims.y] x [0, dims.z] with uniform wall
// absorption derived from T60. t60 == 0 requests an anechoic room.
struct Room {
  Vec3 dims{6.0, 5.0, 3.0};
  double t60 = 0.3;
  AbsorptionModel absorption = AbsorptionModel::kImageDecay;

  bool contains(Vec3 p) const {
    return p.x > 0.0 && p.x < dims.x && p.y > 0.0 && p.y < dims.y && p.z > 0.0 && p.z < dims.z;
  }
  double volume() const { return dims.x * dims.y * dims.z; }
  double surface() const {
    return 2.0 * (dims.x * dims.y + dims.x * dims.z + dims.y * dims.z);
  }
};

namespace detail {

// Images at distance d in direction u have undergone about
// d * g(u) reflections, g(u) = sum_a |u_a| / L_a. With tau = -2 c ln(beta) t
// the energy density along u decays as exp(-g tau), so the direction-averaged
// energy decay curve is E(tau) = mean_u exp(-g tau) / g, a shape fixed by the
// room dimensions alone. Returns the tau span of a 60 dB decay extrapolated
// from the -5 .. -35 dB range of E, as measure_t60 does on real responses.
inline double image_decay_span(Vec3 dims) {
  constexpr int kPolar = 48;
  constexpr int kAzimuth = 48;
  std::vector<double> g;
  std::vector<double> w;
  g.reserve(kPolar * kAzimuth);
  w.reserve(kPolar * kAzimuth);
  // One octant suffices since g depends on |u_a| only.
  for (int i = 0; i < kPolar; ++i) {
    const double theta = (i + 0.5) * (std::numbers::pi / 2.0) / kPolar;
    for (int j = 0; j < kAzimuth; ++j) {
      const double phi = (j + 0.5) * (std::numbers::pi / 2.0) / kAzimuth;
      const double ux = std::sin(theta) * std::cos(phi);
      const double uy = std::sin(theta) * std::sin(phi);
      const double uz = std::cos(theta);
      g.push_back(ux / dims.x + uy / dims.y + uz / dims.z);
      w.push_back(std::sin(theta));
    }
  }
  const auto edc = [&](double tau) {
    double acc = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) acc += w[k] * std::exp(-g[k] * tau) / g[k];
    return acc;
  };
  const double e0 = edc(0.0);
  const auto crossing = [&](double db) {
    const double level = e0 * std::pow(10.0, db / 10.0);
    double lo = 0.0;
    double hi = 1.0;
    while (edc(hi) > level) hi *= 2.0;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (edc(mid) > level ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };
  return 2.0 * (crossing(-35.0) - crossing(-5.0));
}

}  // namespace detail

// Pressure reflection coefficient of every wall. Sabine gives
// alpha = 24 ln(10) V / (c S T60) and beta = sqrt(1 - alpha), Eyring
// alpha = 1 - exp(-that). Sabine exceeds 1 for very short T60 in large rooms;
// that case is rejected.
inline double reflection_coefficient(const Room& room, double c = kSpeedOfSound) {
  if (room.t60 <= 0.0) return 0.0;
  if (room.absorption == AbsorptionModel::kImageDecay) {
    return std::exp(-detail::image_decay_span(room.dims) / (2.0 * c * room.t60));
  }
  const double sabine = 24.0 * std::numbers::ln10 * room.volume() / (c * room.surface() * room.t60);
  const double alpha =
      room.absorption == AbsorptionModel::kSabine ? sabine : 1.0 - std::exp(-sabine);
  if (alpha > 1.0) {
    detail::fail(ErrorKind::kConstraint, "T60 too short for this room under Sabine absorption");
  }
  return std::sqrt(1.0 - alpha);
}

struct Rir {
  int sample_rate = kPipelineSampleRate;
  std::vector<double> taps;
  double source_distance = 0.0;
};

struct RirOptions {
  double speed_of_sound = kSpeedOfSound;
  // Images are kept while their arrival lies within this many dB of decay
  // (at the room's T60) after the direct path.
  double tail_db = 60.0;
  // Cutoff of the DC-blocking high-pass applied to reverberant responses;
  // 0 disables it. All images share one sign, so without it late taps
  // accumulate a DC build-up that lengthens the measured decay.
  double highpass_hz = 100.0;
};

// Two-pole DC-blocking filter of the classic image-method generator, in place.
inline void highpass_in_place(std::span<double> x, int fs, double cutoff_hz) {
  const double w = 2.0 * std::numbers::pi * cutoff_hz / fs;
  const double r1 = std::exp(-w);
  const double b1 = 2.0 * r1 * std::cos(w);
  const double b2 = -r1 * r1;
  const double a1 = -(1.0 + r1);
  double y1 = 0.0;
  double y2 = 0.0;
  for (double& v : x) {
    const double y0 = v + b1 * y1 + b2 * y2;
    v = y0 + a1 * y1 + r1 * y2;
    y2 = y1;
    y1 = y0;
  }
}

inline int direct_path_delay(Vec3 src, Vec3 mic, int fs, double c = kSpeedOfSound) {
  return static_cast<int>(std::lround(distance(src, mic) / c * fs));
}

// Image-source impulse response. Every image contributes
// beta^reflections / (4 pi d) at the nearest sample to d / c; reverberant
// responses are then high-passed. Anechoic responses hold the direct tap only.
inline Rir simulate_rir(const Room& room, Vec3 src, Vec3 mic, int fs,
                        const RirOptions& opt = {}) {
  using detail::fail;
  detail::require(fs > 0, "sample rate must be positive");
  detail::require(room.t60 >= 0.0, "T60 must be >= 0");
  if (!room.contains(src)) fail(ErrorKind::kConstraint, "source outside the room");
  if (!room.contains(mic)) fail(ErrorKind::kConstraint, "microphone outside the room");
  const double d0 = distance(src, mic);
  if (d0 < 1e-9) fail(ErrorKind::kConstraint, "source and microphone coincide");

  const double c = opt.speed_of_sound;
  const double beta = reflection_coefficient(room, c);
  const double max_time = d0 / c + room.t60 * opt.tail_db / 60.0;
  const double max_dist = max_time * c;
  const auto length = static_cast<std::size_t>(std::ceil(max_time * fs)) + 2;

  Rir rir;
  rir.sample_rate = fs;
  rir.source_distance = d0;
  rir.taps.assign(length, 0.0);

  const std::array<double, 3> L{room.dims.x, room.dims.y, room.dims.z};
  const std::array<double, 3> s{src.x, src.y, src.z};
  const std::array<double, 3> r{mic.x, mic.y, mic.z};
  std::array<int, 3> n_max{};
  for (int a = 0; a < 3; ++a) n_max[a] = static_cast<int>(std::ceil(max_dist / (2.0 * L[a]))) + 1;
  if (beta == 0.0) n_max = {0, 0, 0};

  // Per axis: image offset and reflection count for each (n, q).
  struct AxisImage {
    double delta;
    int reflections;
  };
  std::array<std::vector<AxisImage>, 3> axes;
  for (int a = 0; a < 3; ++a) {
    for (int n = -n_max[a]; n <= n_max[a]; ++n) {
      for (int q = 0; q <= 1; ++q) {
        const int reflections = std::abs(n - q) + std::abs(n);
        if (beta == 0.0 && reflections > 0) continue;
        const double image = (1 - 2 * q) * s[a] + 2.0 * n * L[a];
        axes[a].push_back({image - r[a], reflections});
      }
    }
  }

  const double max_d2 = max_dist * max_dist;
  for (const auto& ix : axes[0]) {
    const double dx2 = ix.delta * ix.delta;
    if (dx2 > max_d2) continue;
    for (const auto& iy : axes[1]) {
      const double dxy2 = dx2 + iy.delta * iy.delta;
      if (dxy2 > max_d2) continue;
      for (const auto& iz : axes[2]) {
        const double d2 = dxy2 + iz.delta * iz.delta;
        if (d2 > max_d2) continue;
        const double d = std::sqrt(d2);
        const auto tap = static_cast<std::size_t>(std::lround(d / c * fs));
        if (tap >= length) continue;
        const int k = ix.reflections + iy.reflections + iz.reflections;
        rir.taps[tap] += std::pow(beta, k) / (4.0 * std::numbers::pi * d);
      }
    }
  }
  if (beta > 0.0 && opt.highpass_hz > 0.0) highpass_in_place(rir.taps, fs, opt.highpass_hz);
  return rir;
}

struct T60Measurement {
  double t60 = 0.0;
  std::size_t fit_begin = 0;  // first sample of the -5 dB .. -35 dB fit
  std::size_t fit_end = 0;
};

// Schroeder backward integration, least-squares line over the -5 to -35 dB
// range of the energy decay curve, extrapolated to 60 dB.
inline T60Measurement measure_t60_detailed(const Rir& rir) {
  detail::require(!rir.taps.empty(), "empty impulse response");
  const std::size_t n = rir.taps.size();
  std::vector<double> edc(n);
  double acc = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    acc += rir.taps[i] * rir.taps[i];
    edc[i] = acc;
  }
  const double total = edc[0];
  if (!(total > 0.0)) detail::fail(ErrorKind::kNumeric, "decay range not reached");

  std::size_t begin = n;
  std::size_t end = n;
  for (std::size_t i = 0; i < n; ++i) {
    const double db = edc[i] > 0.0 ? 10.0 * std::log10(edc[i] / total) : -400.0;
    if (begin == n && db <= -5.0) begin = i;
    if (db <= -35.0) {
      end = i;
      break;
    }
  }
  // Need the decay to pass through both levels with samples in between.
  if (begin == n || end == n || end <= begin + 2 || edc[end] <= 0.0) {
    detail::fail(ErrorKind::kNumeric, "decay range not reached");
  }

  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  std::size_t count = 0;
  for (std::size_t i = begin; i <= end; ++i) {
    if (edc[i] <= 0.0) continue;
    const double t = static_cast<double>(i) / rir.sample_rate;
    const double y = 10.0 * std::log10(edc[i] / total);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    ++count;
  }
  const double k = static_cast<double>(count);
  const double slope = (k * sty - st * sy) / (k * stt - st * st);
  if (!(slope < 0.0)) detail::fail(ErrorKind::kNumeric, "energy decay curve is not decaying");
  return {-60.0 / slope, begin, end};
}

inline double measure_t60(const Rir& rir) { return measure_t60_detailed(rir).t60; }

// Microphone positions relative to the array center.
struct ArrayGeometry {
  std::string name;
  std::vector<Vec3> offsets;

  int channels() const { return static_cast<int>(offsets.size()); }

  // Along the x axis, broadside toward +y.
  static ArrayGeometry ula(int channels = 4, double spacing = 0.08) {
    detail::require(channels >= 1, "array needs at least one microphone");
    detail::require(spacing > 0.0, "spacing must be positive");
    ArrayGeometry g{"ula", {}};
    for (int m = 0; m < channels; ++m) {
      g.offsets.push_back({(m - (channels - 1) / 2.0) * spacing, 0.0, 0.0});
    }
    return g;
  }

  // Horizontal circle; with `center_mic` the first microphone sits at the
  // center and the remaining channels - 1 on the circle.
  static ArrayGeometry circular(int channels = 7, double diameter = 0.08, bool center_mic = true) {
    detail::require(channels >= (center_mic ? 2 : 1), "too few microphones for a circular array");
    detail::require(diameter > 0.0, "diameter must be positive");
    ArrayGeometry g{"circular", {}};
    const int ring = center_mic ? channels - 1 : channels;
    if (center_mic) g.offsets.push_back({0.0, 0.0, 0.0});
    for (int k = 0; k < ring; ++k) {
      const double phi = 2.0 * std::numbers::pi * k / ring;
      g.offsets.push_back({diameter / 2.0 * std::cos(phi), diameter / 2.0 * std::sin(phi), 0.0});
    }
    return g;
  }

  static ArrayGeometry custom(std::vector<Vec3> offsets) {
    ArrayGeometry g{"custom", std::move(offsets)};
    g.validate();
    return g;
  }

  void validate() const {
    detail::require(!offsets.empty(), "array needs at least one microphone");
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      for (std::size_t j = i + 1; j < offsets.size(); ++j) {
        detail::require(distance(offsets[i], offsets[j]) > 1e-9,
                        "microphone positions must be distinct");
      }
    }
  }
};

enum class SourceRole { kTarget, kNonTarget, kInterferer };

inline constexpr std::array<SourceRole, 3> kAllRoles{SourceRole::kTarget, SourceRole::kNonTarget,
                                                     SourceRole::kInterferer};

inline std::string_view to_string(SourceRole role) {
  switch (role) {
    case SourceRole::kTarget: return "target";
    case SourceRole::kNonTarget: return "non_target";
    case SourceRole::kInterferer: return "interferer";
  }
  return "unknown";
}

struct Source {
  Vec3 position;
  SourceRole role = SourceRole::kTarget;
};

// Layout rules for sampled scenes. Angles are azimuths about the array
// center, measured from broadside (+y); the frontal half-plane is [-90, 90].
struct SceneConstraints {
  Room room{{6.0, 5.0, 3.0}, 0.3};
  Vec3 array_center{3.0, 1.5, 1.2};
  double min_range = 0.7;
  double max_range = 2.0;
  double min_separation_deg = 15.0;
  std::vector<double> t60_grid{0.1, 0.3, 0.5, 0.7};
  int max_attempts = 10000;
};

struct RoomScene {
  Room room;
  Vec3 array_center;
  ArrayGeometry array;
  std::vector<Source> sources;

  std::vector<Vec3> mic_positions() const {
    std::vector<Vec3> out;
    for (const auto& o : array.offsets) out.push_back(array_center + o);
    return out;
  }

  const Source* find(SourceRole role) const {
    for (const auto& s : sources) {
      if (s.role == role) return &s;
    }
    return nullptr;
  }
};

inline double source_range(const RoomScene& scene, const Source& s) {
  const Vec3 d = s.position - scene.array_center;
  return std::hypot(d.x, d.y);
}

inline double source_azimuth_deg(const RoomScene& scene, const Source& s) {
  const Vec3 d = s.position - scene.array_center;
  return std::atan2(d.x, d.y) * 180.0 / std::numbers::pi;
}

// Throws kConstraint naming the first violated rule.
inline void validate_scene(const RoomScene& scene, double min_range = 0.7, double max_range = 2.0,
                           double min_separation_deg = 15.0) {
  using detail::fail;
  if (!(scene.room.t60 > 0.0)) fail(ErrorKind::kConstraint, "scene T60 must be positive");
  scene.array.validate();
  for (const auto& mic : scene.mic_positions()) {
    if (!scene.room.contains(mic)) fail(ErrorKind::kConstraint, "microphone outside the room");
  }
  const Source* target = scene.find(SourceRole::kTarget);
  if (target == nullptr) fail(ErrorKind::kConstraint, "scene has no target source");
  const double tol = 1e-9;
  for (std::size_t i = 0; i < scene.sources.size(); ++i) {
    const auto& s = scene.sources[i];
    if (!scene.room.contains(s.position)) fail(ErrorKind::kConstraint, "source outside the room");
    const double range = source_range(scene, s);
    if (range < min_range - tol || range > max_range + tol) {
      fail(ErrorKind::kConstraint, std::string(to_string(s.role)) + " range out of bounds");
    }
    if (range < source_range(scene, *target) - tol) {
      fail(ErrorKind::kConstraint, "target must be the closest source");
    }
    for (std::size_t j = i + 1; j < scene.sources.size(); ++j) {
      const double sep = std::abs(source_azimuth_deg(scene, s) -
                                  source_azimuth_deg(scene, scene.sources[j]));
      if (sep < min_separation_deg - tol) {
        fail(ErrorKind::kConstraint, "sources closer than the minimum angular separation");
      }
    }
  }
}

namespace detail {
// Uniform in [0, 1) from the top 53 bits; portable across standard libraries.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}
}  // namespace detail

// Rejection-samples target, non-target and interferer positions in the
// frontal ring sector at array height. Deterministic for a given seed.
inline RoomScene sample_scene(std::uint64_t seed, const ArrayGeometry& array,
                              const SceneConstraints& cons = {}) {
  detail::require(cons.min_range > 0.0 && cons.max_range >= cons.min_range, "invalid range bounds");
  detail::require(!cons.t60_grid.empty(), "empty T60 grid");
  std::mt19937_64 rng(seed);

  RoomScene scene;
  scene.room = cons.room;
  scene.room.t60 =
      cons.t60_grid[static_cast<std::size_t>(detail::uniform01(rng) * cons.t60_grid.size())];
  scene.array_center = cons.array_center;
  scene.array = array;

  for (int attempt = 0; attempt < cons.max_attempts; ++attempt) {
    std::array<double, 3> range{};
    std::array<double, 3> azimuth{};
    for (int k = 0; k < 3; ++k) {
      range[k] = cons.min_range + (cons.max_range - cons.min_range) * detail::uniform01(rng);
      azimuth[k] = -90.0 + 180.0 * detail::uniform01(rng);
    }
    // The closest draw becomes the target.
    const auto closest = std::min_element(range.begin(), range.end()) - range.begin();
    std::swap(range[0], range[closest]);
    std::swap(azimuth[0], azimuth[closest]);

    bool separated = true;
    for (int i = 0; i < 3; ++i) {
      for (int j = i + 1; j < 3; ++j) {
        separated &= std::abs(azimuth[i] - azimuth[j]) >= cons.min_separation_deg;
      }
    }
    if (!separated) continue;

    scene.sources.clear();
    for (int k = 0; k < 3; ++k) {
      const double a = azimuth[k] * std::numbers::pi / 180.0;
      const Vec3 p = cons.array_center + Vec3{range[k] * std::sin(a), range[k] * std::cos(a), 0.0};
      scene.sources.push_back({p, kAllRoles[k]});
    }
    bool inside = true;
    for (const auto& s : scene.sources) inside &= scene.room.contains(s.position);
    for (const auto& mic : scene.mic_positions()) inside &= scene.room.contains(mic);
    if (!inside) continue;
    return scene;
  }
  detail::fail(ErrorKind::kConstraint, "scene sampling budget exhausted; constraints unsatisfiable");
}

struct MixSpec {
  double sir_db = 5.0;
  double snr_db = 25.0;
  double clip_seconds = 8.0;
  std::uint64_t noise_seed = 0;

  static constexpr std::array<double, 4> kSirGrid{0.0, 5.0, 10.0, 15.0};
  static constexpr std::array<double, 3> kSnrGrid{20.0, 25.0, 30.0};
  static constexpr std::array<double, 4> kTrainT60Grid{0.1, 0.3, 0.5, 0.7};
  static constexpr std::array<double, 3> kTestT60Grid{0.16, 0.36, 0.61};
};

struct Stems {
  std::vector<double> target;
  std::vector<double> non_target;
  std::vector<double> interferer;

  const std::vector<double>& get(SourceRole role) const {
    switch (role) {
      case SourceRole::kTarget: return target;
      case SourceRole::kNonTarget: return non_target;
      case SourceRole::kInterferer: break;
    }
    return interferer;
  }
};

// Per-source, per-microphone impulse responses.
using RirSet = std::map<SourceRole, std::vector<Rir>>;

struct MixResult {
  MultichannelAudio mixture;
  std::map<SourceRole, MultichannelAudio> images;  // scaled reverberant sources
  MultichannelAudio noise;
  std::map<SourceRole, double> gains;              // applied to each image
  double noise_gain = 0.0;
  double realized_sir_db = 0.0;
  double realized_snr_db = 0.0;
};

// Linear convolution truncated to the input length.
inline std::vector<double> fft_convolve(std::span<const double> x, std::span<const double> h,
                                        std::size_t out_len) {
  std::size_t n = 1;
  while (n < x.size() + h.size()) n <<= 1;
  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> xa(n, 0.0), ha(n, 0.0);
  std::copy(x.begin(), x.end(), xa.begin());
  std::copy(h.begin(), h.end(), ha.begin());
  std::vector<std::complex<double>> X, H;
  fft.fwd(X, xa);
  fft.fwd(H, ha);
  for (std::size_t k = 0; k < X.size(); ++k) X[k] *= H[k];
  std::vector<double> y;
  fft.inv(y, X, static_cast<Eigen::Index>(n));
  y.resize(out_len);
  return y;
}

inline double mean_power(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return x.empty() ? 0.0 : acc / static_cast<double>(x.size());
}

inline RirSet simulate_scene_rirs(const RoomScene& scene, int fs, const RirOptions& opt = {}) {
  RirSet set;
  for (const auto& s : scene.sources) {
    auto& row = set[s.role];
    for (const auto& mic : scene.mic_positions()) {
      row.push_back(simulate_rir(scene.room, s.position, mic, fs, opt));
    }
  }
  return set;
}

// Reverberant mixture: every stem convolved per microphone, the interferer
// scaled to the requested SIR and the non-target speaker to equal power with
// the target (both measured at microphone 0), plus white sensor noise at the
// requested SNR against the total directional power at microphone 0.
// mixture == (target + non_target + interferer) + noise, summed in that order.
inline MixResult mix_scene(const RoomScene& scene, const Stems& stems, const MixSpec& spec,
                           const std::optional<RirSet>& external_rirs = std::nullopt,
                           int fs = kPipelineSampleRate) {
  using detail::fail;
  const auto clip = static_cast<std::size_t>(std::llround(spec.clip_seconds * fs));
  detail::require(clip > 0, "clip length must be positive");
  const int mics = scene.array.channels();

  const RirSet rirs = external_rirs ? *external_rirs : simulate_scene_rirs(scene, fs);
  for (SourceRole role : kAllRoles) {
    const auto& stem = stems.get(role);
    if (stem.size() < clip) {
      fail(ErrorKind::kInvalidArgument,
           std::string(to_string(role)) + " stem shorter than the clip length");
    }
    auto it = rirs.find(role);
    if (it == rirs.end() || static_cast<int>(it->second.size()) != mics) {
      fail(ErrorKind::kInvalidArgument, "missing RIR for " + std::string(to_string(role)));
    }
    for (const auto& rir : it->second) {
      if (rir.sample_rate != fs) fail(ErrorKind::kInvalidArgument, "RIR sample rate mismatch");
    }
  }

  MixResult out;
  std::map<SourceRole, double> ref_power;
  for (SourceRole role : kAllRoles) {
    const std::span<const double> stem(stems.get(role).data(), clip);
    MultichannelAudio image(fs, mics, clip);
    for (int m = 0; m < mics; ++m) {
      const auto y = fft_convolve(stem, rirs.at(role)[m].taps, clip);
      std::copy(y.begin(), y.end(), image.channel(m).begin());
    }
    ref_power[role] = mean_power(image.channel(0));
    out.images.emplace(role, std::move(image));
  }

  const double p_target = ref_power[SourceRole::kTarget];
  if (!(p_target > 0.0)) fail(ErrorKind::kInvalidArgument, "target image is silent");
  const auto gain_for = [](double want, double have) {
    return have > 0.0 ? std::sqrt(want / have) : 0.0;
  };
  out.gains[SourceRole::kTarget] = 1.0;
  out.gains[SourceRole::kNonTarget] = gain_for(p_target, ref_power[SourceRole::kNonTarget]);
  out.gains[SourceRole::kInterferer] = gain_for(
      p_target / std::pow(10.0, spec.sir_db / 10.0), ref_power[SourceRole::kInterferer]);
  for (SourceRole role : kAllRoles) {
    const double g = out.gains[role];
    if (g == 1.0) continue;
    for (int m = 0; m < mics; ++m) {
      for (double& v : out.images.at(role).channel(m)) v *= g;
    }
  }

  MultichannelAudio directional(fs, mics, clip);
  for (int m = 0; m < mics; ++m) {
    auto d = directional.channel(m);
    const auto t = out.images.at(SourceRole::kTarget).channel(m);
    const auto n = out.images.at(SourceRole::kNonTarget).channel(m);
    const auto i = out.images.at(SourceRole::kInterferer).channel(m);
    for (std::size_t k = 0; k < clip; ++k) d[k] = t[k] + n[k] + i[k];
  }

  std::mt19937_64 rng(spec.noise_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  out.noise = MultichannelAudio(fs, mics, clip);
  for (int m = 0; m < mics; ++m) {
    for (double& v : out.noise.channel(m)) v = gauss(rng);
  }
  const double p_dir = mean_power(directional.channel(0));
  out.noise_gain = gain_for(p_dir / std::pow(10.0, spec.snr_db / 10.0),
                            mean_power(out.noise.channel(0)));
  for (int m = 0; m < mics; ++m) {
    for (double& v : out.noise.channel(m)) v *= out.noise_gain;
  }

  out.mixture = MultichannelAudio(fs, mics, clip);
  for (int m = 0; m < mics; ++m) {
    auto y = out.mixture.channel(m);
    const auto d = directional.channel(m);
    const auto v = out.noise.channel(m);
    for (std::size_t k = 0; k < clip; ++k) y[k] = d[k] + v[k];
  }

  const double p_interf = mean_power(out.images.at(SourceRole::kInterferer).channel(0));
  const double p_noise = mean_power(out.noise.channel(0));
  out.realized_sir_db = p_interf > 0.0 ? 10.0 * std::log10(mean_power(
                                             out.images.at(SourceRole::kTarget).channel(0)) /
                                                           p_interf)
                                       : std::numeric_limits<double>::infinity();
  out.realized_snr_db = p_noise > 0.0 ? 10.0 * std::log10(p_dir / p_noise)
                                      : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace lstsc
