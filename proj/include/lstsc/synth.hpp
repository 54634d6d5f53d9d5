#pragma once

// Synthetic source signals for scene generation when no recorded stems are
// supplied. Talkers are sequences of voiced syllables (formant-shaped
// harmonic complexes with gliding pitch) plus occasional fricative noise
// bursts. The TV interferer is continuous multi-voice babble over a pink
// noise floor, so it is present in every frame and most bins.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "lstsc/room.hpp"

namespace lstsc {

// Half-open sample range [begin, end).
struct Segment {
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const Segment&, const Segment&) = default;
};

namespace detail {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Second-order resonance magnitude at `hz`.
inline double formant_gain(double hz, double center, double bandwidth) {
  const double x = (hz - center) / (bandwidth / 2.0);
  return 1.0 / std::sqrt(1.0 + x * x);
}

inline void normalize_rms(std::vector<double>& x, double rms) {
  const double p = mean_power(x);
  if (p <= 0.0) return;
  const double g = rms / std::sqrt(p);
  for (double& v : x) v *= g;
}

inline void add_syllable(std::vector<double>& out, std::mt19937_64& rng, std::size_t start,
                         std::size_t length, double f0_base, int fs) {
  const double f0_a = f0_base * uniform(rng, 0.85, 1.15);
  const double f0_b = f0_base * uniform(rng, 0.85, 1.15);
  const std::array<double, 3> formants{uniform(rng, 300.0, 850.0), uniform(rng, 900.0, 2300.0),
                                       uniform(rng, 2400.0, 3300.0)};
  const std::array<double, 3> bandwidths{90.0, 120.0, 180.0};
  const double ramp = 0.02 * fs;
  const int harmonics = static_cast<int>(std::min(6000.0, fs / 2.0 - 200.0) / f0_base);

  std::vector<double> amp(static_cast<std::size_t>(harmonics) + 1, 0.0);
  for (int k = 1; k <= harmonics; ++k) {
    const double hz = k * f0_base;
    double g = 0.0;
    for (int i = 0; i < 3; ++i) g += formant_gain(hz, formants[i], bandwidths[i]) / (i + 1);
    amp[k] = g / std::sqrt(static_cast<double>(k));
  }

  double phase = uniform(rng, 0.0, 1.0);
  for (std::size_t n = 0; n < length && start + n < out.size(); ++n) {
    const double t = static_cast<double>(n) / static_cast<double>(length);
    const double f0 = f0_a + (f0_b - f0_a) * t;
    phase += f0 / fs;
    phase -= std::floor(phase);
    double s = 0.0;
    for (int k = 1; k <= harmonics; ++k) {
      if (k * f0 >= fs / 2.0) break;
      s += amp[k] * std::sin(2.0 * std::numbers::pi * k * phase);
    }
    const double fade_in = std::min(1.0, static_cast<double>(n) / ramp);
    const double fade_out = std::min(1.0, static_cast<double>(length - n) / ramp);
    out[start + n] += s * std::min(fade_in, fade_out);
  }

  // Fricative onset: differentiated white noise.
  if (uniform01(rng) < 0.35) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto burst = static_cast<std::size_t>(uniform(rng, 0.04, 0.09) * fs);
    double prev = 0.0;
    for (std::size_t n = 0; n < burst && start + n < out.size(); ++n) {
      const double w = gauss(rng);
      const double env = std::sin(std::numbers::pi * n / burst);
      out[start + n] += 0.4 * (w - prev) * env;
      prev = w;
    }
  }
}

}  // namespace detail

// One talker speaking inside the given segments and silent elsewhere.
// Output RMS over the active samples is `rms`.
inline std::vector<double> synth_talker(std::uint64_t seed, std::size_t samples, int fs,
                                        const std::vector<Segment>& active, double rms = 0.05) {
  std::mt19937_64 rng(seed);
  const double f0_base = detail::uniform(rng, 95.0, 220.0);
  std::vector<double> out(samples, 0.0);
  std::size_t active_samples = 0;
  for (const auto& seg : active) {
    std::size_t pos = seg.begin;
    const std::size_t end = std::min(seg.end, samples);
    active_samples += end > seg.begin ? end - seg.begin : 0;
    while (pos < end) {
      auto len = static_cast<std::size_t>(detail::uniform(rng, 0.12, 0.30) * fs);
      len = std::min(len, end - pos);
      detail::add_syllable(out, rng, pos, len, f0_base, fs);
      pos += len + static_cast<std::size_t>(detail::uniform(rng, 0.02, 0.07) * fs);
    }
  }
  if (active_samples > 0) {
    const double p = mean_power(out) * static_cast<double>(samples) / active_samples;
    if (p > 0.0) {
      const double g = rms / std::sqrt(p);
      for (double& v : out) v *= g;
    }
  }
  return out;
}

// Persistent speech-like interferer occupying the whole clip.
inline std::vector<double> synth_tv_interferer(std::uint64_t seed, std::size_t samples, int fs,
                                               double rms = 0.05) {
  std::mt19937_64 rng(seed);
  std::vector<double> out(samples, 0.0);
  const std::vector<Segment> all{{0, samples}};
  for (int voice = 0; voice < 3; ++voice) {
    const auto v = synth_talker(rng(), samples, fs, all, 1.0);
    for (std::size_t n = 0; n < samples; ++n) out[n] += v[n];
  }
  detail::normalize_rms(out, 1.0);

  // Pink floor (Kellet's economy filter) about 15 dB below the babble.
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> pink(samples);
  double b0 = 0.0, b1 = 0.0, b2 = 0.0;
  for (std::size_t n = 0; n < samples; ++n) {
    const double w = gauss(rng);
    b0 = 0.99765 * b0 + w * 0.0990460;
    b1 = 0.96300 * b1 + w * 0.2965164;
    b2 = 0.57000 * b2 + w * 1.0526913;
    pink[n] = b0 + b1 + b2 + w * 0.1848;
  }
  detail::normalize_rms(pink, std::pow(10.0, -15.0 / 20.0));
  for (std::size_t n = 0; n < samples; ++n) out[n] += pink[n];
  detail::normalize_rms(out, rms);
  return out;
}

struct SynthStems {
  Stems stems;
  std::vector<Segment> target_active;
  std::vector<Segment> non_target_active;
};

// Default conversational layout: a short lead-in with only the interferer,
// then alternating, non-overlapping target and non-target utterances.
inline SynthStems synth_conversation(std::uint64_t seed, std::size_t samples, int fs) {
  std::mt19937_64 rng(seed);
  SynthStems out;
  auto pos = static_cast<std::size_t>(detail::uniform(rng, 0.5, 1.0) * fs);
  bool target_turn = true;
  while (pos < samples) {
    const auto len = static_cast<std::size_t>(detail::uniform(rng, 1.0, 2.5) * fs);
    const Segment seg{pos, std::min(samples, pos + len)};
    (target_turn ? out.target_active : out.non_target_active).push_back(seg);
    pos = seg.end + static_cast<std::size_t>(detail::uniform(rng, 0.2, 0.6) * fs);
    target_turn = !target_turn;
  }
  out.stems.target = synth_talker(rng(), samples, fs, out.target_active);
  out.stems.non_target = synth_talker(rng(), samples, fs, out.non_target_active);
  out.stems.interferer = synth_tv_interferer(rng(), samples, fs);
  return out;
}

}  // namespace lstsc
