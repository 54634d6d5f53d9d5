#pragma once

// Long-short-term spatial coherence (LSTSC).
//
// Per TF bin, the short-term relative transfer function (RTF) of every
// microphone against microphone 0 is estimated from a (2R+1)-frame cross- to
// auto-spectrum ratio and reduced to its phase ("whitened"). Two recursive
// averages of that whitened vector are kept: a fast local one and a slow
// global one. The coherence between the instantaneous vector and each
// whitened average is a real number in [-1, 1] whose meaning does not depend
// on the number of microphones.
//
// Per frame the order is fixed: estimate r(l), compare against the local
// state from l-1, update the local state, choose the global forgetting
// factor, compare against the global state from l-1, update the global state.
// Both states are seeded with r(0), so gamma(0, f) == 1.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lstsc/erb.hpp"
#include "lstsc/error.hpp"
#include "lstsc/stft.hpp"

namespace lstsc {

enum class Variant { kLstsc1, kLstsc2, kLstsc3, kLstsc4 };

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kLstsc1: return "lstsc-1";
    case Variant::kLstsc2: return "lstsc-2";
    case Variant::kLstsc3: return "lstsc-3";
    case Variant::kLstsc4: return "lstsc-4";
  }
  return "unknown";
}

inline Variant parse_variant(std::string_view name) {
  for (Variant v : {Variant::kLstsc1, Variant::kLstsc2, Variant::kLstsc3, Variant::kLstsc4}) {
    if (name == to_string(v)) return v;
  }
  detail::fail(ErrorKind::kInvalidArgument, "unknown variant '" + std::string(name) + "'");
}

struct CoherenceConfig {
  int context = 1;              // R: half-width of the short-term average, in frames
  double lambda_local = 0.01;
  // Fixed global forgetting factor; empty selects the mask-driven schedule.
  std::optional<double> lambda_global = 0.99;
  double beta = 0.01;           // halting threshold on mean squared mask
  double epsilon = 1e-12;
  bool apply_arcsine = false;
  bool erb_pooling = false;
  std::optional<Variant> variant;

  static CoherenceConfig for_variant(Variant v) {
    CoherenceConfig cfg;
    cfg.variant = v;
    cfg.lambda_global = v == Variant::kLstsc1 ? std::optional<double>(0.99) : std::nullopt;
    cfg.apply_arcsine = v == Variant::kLstsc3 || v == Variant::kLstsc4;
    cfg.erb_pooling = v == Variant::kLstsc4;
    return cfg;
  }

  bool time_varying() const { return !lambda_global.has_value(); }

  void validate() const {
    detail::require(context >= 0, "context R must be >= 0");
    detail::require(lambda_local >= 0.0 && lambda_local <= 1.0, "lambda_local must lie in [0, 1]");
    detail::require(!lambda_global || (*lambda_global >= 0.0 && *lambda_global <= 1.0),
                    "lambda_global must lie in [0, 1]");
    detail::require(beta > 0.0, "beta must be positive");
    detail::require(epsilon > 0.0, "epsilon must be positive");
    if (variant) {
      const CoherenceConfig ref = for_variant(*variant);
      const bool consistent = lambda_local == ref.lambda_local &&
                              lambda_global == ref.lambda_global &&
                              apply_arcsine == ref.apply_arcsine &&
                              erb_pooling == ref.erb_pooling;
      detail::require(consistent, "settings disagree with variant " +
                                      std::string(to_string(*variant)));
    }
  }
};

// Whitened short-term RTFs for one frame: F x (M-1) unit-modulus entries.
// `low_energy[f]` marks bins whose reference auto-spectrum is at or below
// epsilon; those rows hold 1+0j placeholders.
struct RtfField {
  int bins = 0;
  int pairs = 0;  // M - 1
  std::vector<Complex> entries;
  std::vector<std::uint8_t> low_energy;

  RtfField() = default;
  RtfField(int bins_, int pairs_)
      : bins(bins_), pairs(pairs_),
        entries(static_cast<std::size_t>(bins_) * pairs_, Complex(1.0, 0.0)),
        low_energy(static_cast<std::size_t>(bins_), 0) {}

  std::span<const Complex> at(int f) const {
    return {entries.data() + static_cast<std::size_t>(f) * pairs, std::size_t(pairs)};
  }
  std::span<Complex> at(int f) {
    return {entries.data() + static_cast<std::size_t>(f) * pairs, std::size_t(pairs)};
  }
};

// Recursive averages of whitened RTFs, stored before re-whitening.
struct TrackerState {
  int bins = 0;
  int pairs = 0;
  std::vector<Complex> rbar;
  long frame_index = -1;

  std::span<const Complex> at(int f) const {
    return {rbar.data() + static_cast<std::size_t>(f) * pairs, std::size_t(pairs)};
  }

  friend bool operator==(const TrackerState&, const TrackerState&) = default;
};

namespace detail {

inline void check_specs(std::span<const ComplexSpectrogram> specs) {
  if (specs.size() < 2) fail(ErrorKind::kInvalidArgument, "LSTSC requires >= 2 microphones");
  for (const auto& s : specs) {
    require(s.frames() == specs[0].frames() && s.bins() == specs[0].bins(),
            "all channel spectrograms must share one shape");
  }
}

// Unit-modulus projection; entries too small to carry a phase map to `fallback`.
inline Complex whiten_entry(Complex z, double epsilon, Complex fallback) {
  const double mag = std::abs(z);
  return mag > epsilon ? z / mag : fallback;
}

}  // namespace detail

// Frames outside [0, L) are dropped from the averaging window at the edges.
inline RtfField short_term_whitened_rtf(std::span<const ComplexSpectrogram> specs, int l,
                                        const CoherenceConfig& cfg) {
  detail::check_specs(specs);
  const int frames = specs[0].frames();
  const int bins = specs[0].bins();
  detail::require(l >= 0 && l < frames, "frame index out of range");
  const int pairs = static_cast<int>(specs.size()) - 1;
  const int first = std::max(0, l - cfg.context);
  const int last = std::min(frames - 1, l + cfg.context);

  RtfField out(bins, pairs);
  std::vector<Complex> cross(static_cast<std::size_t>(pairs));
  for (int f = 0; f < bins; ++f) {
    double auto_power = 0.0;
    std::fill(cross.begin(), cross.end(), Complex{});
    for (int n = first; n <= last; ++n) {
      const Complex ref = specs[0].at(n, f);
      auto_power += std::norm(ref);
      const Complex ref_conj = std::conj(ref);
      for (int m = 0; m < pairs; ++m) cross[m] += specs[m + 1].at(n, f) * ref_conj;
    }
    auto row = out.at(f);
    if (auto_power <= cfg.epsilon) {
      out.low_energy[f] = 1;
      continue;  // placeholders already 1+0j
    }
    for (int m = 0; m < pairs; ++m) {
      row[m] = detail::whiten_entry(cross[m] / auto_power, cfg.epsilon, Complex(1.0, 0.0));
    }
  }
  return out;
}

// rbar <- lambda * rbar + (1 - lambda) * r, per bin.
inline void recursive_update_in_place(TrackerState& state, const RtfField& r,
                                      std::span<const double> lambda) {
  detail::require(state.bins == r.bins && state.pairs == r.pairs &&
                      lambda.size() == static_cast<std::size_t>(r.bins),
                  "tracker update shape mismatch");
  for (int f = 0; f < r.bins; ++f) {
    const double lam = lambda[f];
    detail::require(lam >= 0.0 && lam <= 1.0, "forgetting factor outside [0, 1]");
    if (lam == 1.0) continue;  // halted: keep the state bit-identical
    Complex* s = state.rbar.data() + static_cast<std::size_t>(f) * r.pairs;
    const auto in = r.at(f);
    for (int m = 0; m < r.pairs; ++m) s[m] = lam * s[m] + (1.0 - lam) * in[m];
  }
  ++state.frame_index;
}

inline TrackerState recursive_update(TrackerState state, const RtfField& r,
                                     std::span<const double> lambda) {
  recursive_update_in_place(state, r, lambda);
  return state;
}

inline TrackerState seed_tracker(const RtfField& r0) {
  return TrackerState{r0.bins, r0.pairs, r0.entries, 0};
}

// Normalized real inner product Re{r^H rbar} / (|r| |rbar|). A zero-norm
// argument yields 0.
inline double coherence(std::span<const Complex> r, std::span<const Complex> rbar) {
  detail::require(r.size() == rbar.size() && !r.empty(), "coherence needs equal, nonempty vectors");
  Complex inner{};
  double nr = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    inner += std::conj(r[i]) * rbar[i];
    nr += std::norm(r[i]);
    nb += std::norm(rbar[i]);
  }
  const double denom = std::sqrt(nr) * std::sqrt(nb);
  if (denom <= 0.0) return 0.0;
  return std::clamp(inner.real() / denom, -1.0, 1.0);
}

// Same quantity when both vectors are whitened: Re{r^H rbar} / (M - 1).
// `rbar` is the unwhitened tracker state; it is whitened entry by entry here,
// and entries with no usable phase contribute nothing.
inline double whitened_coherence(std::span<const Complex> r, std::span<const Complex> rbar,
                                 double epsilon) {
  double acc = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const Complex w = detail::whiten_entry(rbar[i], epsilon, Complex{});
    acc += r[i].real() * w.real() + r[i].imag() * w.imag();
  }
  return std::clamp(acc / static_cast<double>(r.size()), -1.0, 1.0);
}

// Global forgetting factor for frame l given the mask row of frame l-1.
inline std::vector<double> lambda_schedule(std::span<const double> prev_mask,
                                           std::span<const double> gamma_local,
                                           const CoherenceConfig& cfg) {
  double energy = 0.0;
  for (double v : prev_mask) energy += v * v;
  if (!prev_mask.empty()) energy /= static_cast<double>(prev_mask.size());
  std::vector<double> lambda(gamma_local.size(), 1.0);
  if (energy > cfg.beta) return lambda;
  for (std::size_t f = 0; f < gamma_local.size(); ++f) {
    lambda[f] = std::clamp(1.0 - gamma_local[f] / 20.0, 0.95, 1.0);
  }
  return lambda;
}

inline double arcsine_warp(double gamma) {
  return 2.0 / std::numbers::pi * std::asin(std::clamp(gamma, -1.0, 1.0));
}

// L x K real planes (K = F, or B after band pooling).
struct LstscFeatures {
  int frames = 0;
  int bins = 0;
  std::vector<double> gamma_local;
  std::vector<double> gamma_global;
  std::vector<double> warped_local;
  std::vector<double> warped_global;
  std::vector<double> lambda;  // applied global forgetting factor
  std::vector<std::uint8_t> low_energy;  // per bin; empty after pooling
  int warmup_frames = 0;
  bool arcsine = false;  // which of raw/warped the variant designates

  LstscFeatures() = default;
  LstscFeatures(int frames_, int bins_)
      : frames(frames_), bins(bins_),
        gamma_local(size()), gamma_global(size()), warped_local(size()),
        warped_global(size()), lambda(size()), low_energy(size(), 0) {}

  std::size_t size() const { return static_cast<std::size_t>(frames) * bins; }
  std::size_t index(int l, int k) const { return static_cast<std::size_t>(l) * bins + k; }

  static std::span<const double> row(const std::vector<double>& plane, int l, int bins) {
    return {plane.data() + static_cast<std::size_t>(l) * bins, std::size_t(bins)};
  }

  // The global feature the variant feeds downstream.
  const std::vector<double>& designated_global() const {
    return arcsine ? warped_global : gamma_global;
  }
  const std::vector<double>& designated_local() const {
    return arcsine ? warped_local : gamma_local;
  }
};

// Per-frame outputs of the tracker, valid until the next step().
struct FrameFeatures {
  int frame = 0;
  std::span<const double> gamma_local;
  std::span<const double> gamma_global;
  std::span<const double> warped_local;
  std::span<const double> warped_global;
  std::span<const double> lambda;
  const RtfField* rtf = nullptr;
};

// Streaming LSTSC computation. Frames must be stepped in order 0, 1, 2, ...;
// step(l) reads spectrogram frames up to l + R.
class LstscTracker {
 public:
  LstscTracker(CoherenceConfig cfg, int bins, int channels)
      : cfg_(std::move(cfg)), bins_(bins), pairs_(channels - 1) {
    cfg_.validate();
    if (channels < 2) detail::fail(ErrorKind::kInvalidArgument, "LSTSC requires >= 2 microphones");
    const auto n = static_cast<std::size_t>(bins);
    gamma_local_.resize(n);
    gamma_global_.resize(n);
    warped_local_.resize(n);
    warped_global_.resize(n);
    lambda_local_.assign(n, cfg_.lambda_local);
  }

  const CoherenceConfig& config() const { return cfg_; }
  const TrackerState& local_state() const { return local_; }
  const TrackerState& global_state() const { return global_; }
  int next_frame() const { return next_frame_; }

  // `prev_mask` is the mask row of frame l-1; pass an empty span when no mask
  // feedback exists (treated as an all-zero row).
  FrameFeatures step(std::span<const ComplexSpectrogram> specs, std::span<const double> prev_mask) {
    detail::require(static_cast<int>(specs.size()) == pairs_ + 1 && specs[0].bins() == bins_,
                    "spectrograms do not match tracker shape");
    detail::require(prev_mask.empty() || prev_mask.size() == static_cast<std::size_t>(bins_),
                    "mask row length mismatch");
    const int l = next_frame_++;
    rtf_ = short_term_whitened_rtf(specs, l, cfg_);
    if (l == 0) {
      local_ = seed_tracker(rtf_);
      global_ = seed_tracker(rtf_);
      local_.frame_index = global_.frame_index = -1;
    }

    for (int f = 0; f < bins_; ++f) {
      gamma_local_[f] = whitened_coherence(rtf_.at(f), local_.at(f), cfg_.epsilon);
    }
    recursive_update_in_place(local_, rtf_, lambda_local_);

    if (cfg_.time_varying()) {
      lambda_global_ = lambda_schedule(prev_mask, gamma_local_, cfg_);
    } else {
      lambda_global_.assign(static_cast<std::size_t>(bins_), *cfg_.lambda_global);
    }
    for (int f = 0; f < bins_; ++f) {
      gamma_global_[f] = whitened_coherence(rtf_.at(f), global_.at(f), cfg_.epsilon);
    }
    recursive_update_in_place(global_, rtf_, lambda_global_);

    for (int f = 0; f < bins_; ++f) {
      warped_local_[f] = arcsine_warp(gamma_local_[f]);
      warped_global_[f] = arcsine_warp(gamma_global_[f]);
    }
    return FrameFeatures{l, gamma_local_, gamma_global_, warped_local_, warped_global_,
                         lambda_global_, &rtf_};
  }

 private:
  CoherenceConfig cfg_;
  int bins_;
  int pairs_;
  int next_frame_ = 0;
  RtfField rtf_;
  TrackerState local_;
  TrackerState global_;
  std::vector<double> gamma_local_, gamma_global_, warped_local_, warped_global_;
  std::vector<double> lambda_local_, lambda_global_;
};

// Supplies the mask row of frame l after the features of frame l are known.
// Implementations must be causal. Rows are validated to lie in [0, 1].
class MaskEstimator {
 public:
  struct Input {
    int frame = 0;
    std::span<const Complex> reference;  // microphone 0 spectrum, F bins
    std::span<const double> warped_local;
    std::span<const double> warped_global;
    // Band-pooled warped features, present when the config pools to ERB bands.
    std::span<const double> banded_local;
    std::span<const double> banded_global;
  };

  virtual ~MaskEstimator() = default;
  virtual void estimate(const Input& in, std::span<double> mask_row) = 0;
};

using FrameObserver = std::function<void(const FrameFeatures&, const LstscTracker&)>;

// Runs the tracker over whole spectrograms. With an estimator, its mask row
// for frame l feeds the forgetting-factor schedule of frame l+1 and is stored
// in `mask_out` when given. Features are returned per STFT bin; pool them with
// pool_features() for ERB variants. When `bands` is given the estimator also
// receives band-pooled warped features.
inline LstscFeatures compute_lstsc(std::span<const ComplexSpectrogram> specs,
                                   const CoherenceConfig& cfg,
                                   MaskEstimator* estimator = nullptr,
                                   Mask* mask_out = nullptr,
                                   const FrameObserver& observer = {},
                                   const ErbFilterbank* bands = nullptr) {
  detail::check_specs(specs);
  const int frames = specs[0].frames();
  const int bins = specs[0].bins();
  LstscTracker tracker(cfg, bins, static_cast<int>(specs.size()));

  LstscFeatures out(frames, bins);
  out.arcsine = cfg.apply_arcsine;
  out.warmup_frames = std::min(frames, 2 * cfg.context + 1);
  if (mask_out) *mask_out = Mask(frames, bins);

  std::vector<double> prev_mask;
  std::vector<double> mask_row(static_cast<std::size_t>(bins));
  std::vector<double> banded_local, banded_global;
  if (bands) {
    detail::require(bands->bins() == bins, "filterbank does not match spectrogram bins");
    banded_local.resize(static_cast<std::size_t>(bands->bands()));
    banded_global.resize(static_cast<std::size_t>(bands->bands()));
  }

  for (int l = 0; l < frames; ++l) {
    const FrameFeatures ff = tracker.step(specs, prev_mask);
    const auto base = static_cast<std::ptrdiff_t>(out.index(l, 0));
    std::copy(ff.gamma_local.begin(), ff.gamma_local.end(), out.gamma_local.begin() + base);
    std::copy(ff.gamma_global.begin(), ff.gamma_global.end(), out.gamma_global.begin() + base);
    std::copy(ff.warped_local.begin(), ff.warped_local.end(), out.warped_local.begin() + base);
    std::copy(ff.warped_global.begin(), ff.warped_global.end(), out.warped_global.begin() + base);
    std::copy(ff.lambda.begin(), ff.lambda.end(), out.lambda.begin() + base);
    std::copy(ff.rtf->low_energy.begin(), ff.rtf->low_energy.end(), out.low_energy.begin() + base);
    if (observer) observer(ff, tracker);

    if (estimator) {
      MaskEstimator::Input in{l, specs[0].row(l), ff.warped_local, ff.warped_global, {}, {}};
      if (bands) {
        pool_feature(ff.warped_local, *bands, banded_local);
        pool_feature(ff.warped_global, *bands, banded_global);
        in.banded_local = banded_local;
        in.banded_global = banded_global;
      }
      std::fill(mask_row.begin(), mask_row.end(), 0.0);
      estimator->estimate(in, mask_row);
      Mask::check_range(mask_row);
      if (mask_out) mask_out->set_row(l, mask_row);
      prev_mask = mask_row;
    }
  }
  return out;
}

// Band-pools every feature plane. Low-energy flags do not survive pooling.
inline LstscFeatures pool_features(const LstscFeatures& in, const ErbFilterbank& fb) {
  detail::require(in.bins == fb.bins(), "feature bins do not match filterbank");
  LstscFeatures out(in.frames, fb.bands());
  out.low_energy.clear();
  out.warmup_frames = in.warmup_frames;
  out.arcsine = in.arcsine;
  const auto pool_plane = [&](const std::vector<double>& src, std::vector<double>& dst) {
    for (int l = 0; l < in.frames; ++l) {
      pool_feature(LstscFeatures::row(src, l, in.bins), fb,
                   std::span<double>(dst.data() + out.index(l, 0), std::size_t(out.bins)));
    }
  };
  pool_plane(in.gamma_local, out.gamma_local);
  pool_plane(in.gamma_global, out.gamma_global);
  pool_plane(in.warped_local, out.warped_local);
  pool_plane(in.warped_global, out.warped_global);
  pool_plane(in.lambda, out.lambda);
  return out;
}

}  // namespace lstsc
