#pragma once

// Mask-based enhancement driven by LSTSC features.
//
// The mask estimator of frame l closes the loop into the global tracker's
// forgetting factor at frame l+1. HeuristicMaskEstimator stands in for a
// trained speaker-conditioned network behind the same MaskEstimator seam.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "lstsc/audio.hpp"
#include "lstsc/coherence.hpp"
#include "lstsc/erb.hpp"
#include "lstsc/error.hpp"
#include "lstsc/stft.hpp"

namespace lstsc {

// Keeps bins that are directional (high local coherence) but not explained by
// the long-term spatial average (low global coherence).
inline void heuristic_mask(std::span<const double> warped_local,
                           std::span<const double> warped_global, std::span<double> out) {
  detail::require(warped_local.size() == warped_global.size() &&
                      out.size() == warped_local.size(),
                  "heuristic_mask shape mismatch");
  for (std::size_t f = 0; f < out.size(); ++f) {
    out[f] = std::clamp(warped_local[f], 0.0, 1.0) * (1.0 - std::clamp(warped_global[f], 0.0, 1.0));
  }
}

inline std::vector<double> heuristic_mask(std::span<const double> warped_local,
                                          std::span<const double> warped_global) {
  std::vector<double> out(warped_local.size());
  heuristic_mask(warped_local, warped_global, out);
  return out;
}

class HeuristicMaskEstimator final : public MaskEstimator {
 public:
  void estimate(const Input& in, std::span<double> mask_row) override {
    heuristic_mask(in.warped_local, in.warped_global, mask_row);
  }
};

class ConstantMaskEstimator final : public MaskEstimator {
 public:
  explicit ConstantMaskEstimator(double value) : value_(value) {}
  void estimate(const Input&, std::span<double> mask_row) override {
    std::fill(mask_row.begin(), mask_row.end(), value_);
  }

 private:
  double value_;
};

// Ideal amplitude mask min(1, |T| / |Y|) from the known target image at the
// reference microphone. Stands in for a perfectly target-selective estimator
// when studying the feedback loop; it needs ground truth and is not causal
// in any practical sense.
class OracleMaskEstimator final : public MaskEstimator {
 public:
  explicit OracleMaskEstimator(ComplexSpectrogram target) : target_(std::move(target)) {}

  void estimate(const Input& in, std::span<double> mask_row) override {
    detail::require(in.frame < target_.frames() &&
                        in.reference.size() == static_cast<std::size_t>(target_.bins()),
                    "oracle target does not match the mixture");
    const auto t = target_.row(in.frame);
    for (std::size_t f = 0; f < mask_row.size(); ++f) {
      const double y = std::abs(in.reference[f]);
      mask_row[f] = y > 0.0 ? std::min(1.0, std::abs(t[f]) / y) : 0.0;
    }
  }

 private:
  ComplexSpectrogram target_;
};

struct EnhanceResult {
  MultichannelAudio enhanced;  // mono, same length as the input
  Mask mask;
  LstscFeatures features;      // per STFT bin
  std::optional<LstscFeatures> banded;  // when the config pools to ERB bands
  int warmup_frames = 0;
};

inline EnhanceResult enhance_stream(const MultichannelAudio& mixture, const CoherenceConfig& cfg,
                                    MaskEstimator& estimator, const StftConfig& stft_cfg = {}) {
  require_pipeline_rate(mixture);
  detail::require(mixture.channels() >= 2, "LSTSC requires >= 2 microphones");
  cfg.validate();

  std::vector<ComplexSpectrogram> specs;
  specs.reserve(static_cast<std::size_t>(mixture.channels()));
  for (int m = 0; m < mixture.channels(); ++m) specs.push_back(stft(mixture.channel(m), stft_cfg));

  std::optional<ErbFilterbank> fb;
  if (cfg.erb_pooling) fb.emplace(mixture.sample_rate(), stft_cfg.fft_size);

  EnhanceResult result;
  result.features =
      compute_lstsc(specs, cfg, &estimator, &result.mask, {}, fb ? &*fb : nullptr);
  if (fb) result.banded = pool_features(result.features, *fb);
  result.warmup_frames = result.features.warmup_frames;

  const ComplexSpectrogram masked = apply_mask(specs[0], result.mask);
  std::vector<double> out = istft(masked, stft_cfg, mixture.frames());
  result.enhanced = MultichannelAudio(mixture.sample_rate(), {std::move(out)});
  return result;
}

}  // namespace lstsc
