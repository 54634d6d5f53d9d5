#pragma once

// ERB-scale band pooling of STFT bins.
//
// Band centers are spaced uniformly on the Glasberg & Moore ERB-rate scale
// from 0 Hz to Nyquist. Each band is a triangle in Hz rising from the
// previous center and falling to the next one. Where adjacent centers sit
// closer than one bin (low frequencies), the triangle is widened to at least
// one bin spacing on each side so that every band covers some bin.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "lstsc/error.hpp"

namespace lstsc {

inline double hz_to_erb_rate(double hz) { return 21.4 * std::log10(4.37e-3 * hz + 1.0); }
inline double erb_rate_to_hz(double erb) { return (std::pow(10.0, erb / 21.4) - 1.0) / 4.37e-3; }
inline double erb_bandwidth(double hz) { return 24.7 * (4.37e-3 * hz + 1.0); }

class ErbFilterbank {
 public:
  struct Support {
    int first = 0;  // inclusive
    int last = 0;   // inclusive
  };

  ErbFilterbank(int sample_rate, int fft_size, int bands = 48)
      : sample_rate_(sample_rate), fft_size_(fft_size), bands_(bands),
        bins_(fft_size / 2 + 1) {
    detail::require(sample_rate > 0, "sample rate must be positive");
    detail::require(fft_size > 0 && fft_size % 2 == 0, "fft_size must be even");
    detail::require(bands >= 2, "filterbank needs at least two bands");
    detail::require(bands <= bins_, "more bands than STFT bins");

    const double nyquist = sample_rate / 2.0;
    const double bin_hz = static_cast<double>(sample_rate) / fft_size;
    const double top = hz_to_erb_rate(nyquist);
    centers_.resize(static_cast<std::size_t>(bands));
    for (int b = 0; b < bands; ++b) {
      centers_[b] = b == bands - 1 ? nyquist : erb_rate_to_hz(top * b / (bands - 1));
    }

    weights_.assign(static_cast<std::size_t>(bands) * bins_, 0.0);
    supports_.resize(static_cast<std::size_t>(bands));
    norms_.assign(static_cast<std::size_t>(bands), 0.0);
    for (int b = 0; b < bands; ++b) {
      const double c = centers_[b];
      const double lo = b == 0 ? c : std::min(centers_[b - 1], c - bin_hz);
      const double hi = b == bands - 1 ? c : std::max(centers_[b + 1], c + bin_hz);
      Support sup{bins_, -1};
      for (int f = 0; f < bins_; ++f) {
        const double hz = f * bin_hz;
        double w = 0.0;
        if (hz == c) {
          w = 1.0;
        } else if (hz > lo && hz < c) {
          w = (hz - lo) / (c - lo);
        } else if (hz > c && hz < hi) {
          w = (hi - hz) / (hi - c);
        }
        if (w > 0.0) {
          weights_[static_cast<std::size_t>(b) * bins_ + f] = w;
          sup.first = std::min(sup.first, f);
          sup.last = std::max(sup.last, f);
          norms_[b] += w;
        }
      }
      supports_[b] = sup;
    }
  }

  int sample_rate() const { return sample_rate_; }
  int fft_size() const { return fft_size_; }
  int bands() const { return bands_; }
  int bins() const { return bins_; }
  const std::vector<double>& centers() const { return centers_; }
  double weight(int b, int f) const { return weights_[static_cast<std::size_t>(b) * bins_ + f]; }
  std::span<const double> weights(int b) const {
    return {weights_.data() + static_cast<std::size_t>(b) * bins_, std::size_t(bins_)};
  }
  const Support& support(int b) const { return supports_[b]; }
  // Sum of a band's weights.
  double norm(int b) const { return norms_[b]; }

 private:
  int sample_rate_;
  int fft_size_;
  int bands_;
  int bins_;
  std::vector<double> centers_;
  std::vector<double> weights_;  // bands x bins, row-major
  std::vector<Support> supports_;
  std::vector<double> norms_;
};

// Unnormalized weighted sum of a power spectrum per band.
inline void pool_spectrum(std::span<const double> power, const ErbFilterbank& fb,
                          std::span<double> out) {
  detail::require(power.size() == static_cast<std::size_t>(fb.bins()) &&
                      out.size() == static_cast<std::size_t>(fb.bands()),
                  "pool_spectrum shape mismatch");
  for (double p : power) detail::require(p >= 0.0, "power spectrum must be nonnegative");
  for (int b = 0; b < fb.bands(); ++b) {
    const auto& s = fb.support(b);
    double acc = 0.0;
    for (int f = s.first; f <= s.last; ++f) acc += fb.weight(b, f) * power[f];
    out[b] = acc;
  }
}

inline std::vector<double> pool_spectrum(std::span<const double> power, const ErbFilterbank& fb) {
  std::vector<double> out(static_cast<std::size_t>(fb.bands()));
  pool_spectrum(power, fb, out);
  return out;
}

// Weighted mean of a per-bin feature over each band.
inline void pool_feature(std::span<const double> feature, const ErbFilterbank& fb,
                         std::span<double> out) {
  detail::require(feature.size() == static_cast<std::size_t>(fb.bins()) &&
                      out.size() == static_cast<std::size_t>(fb.bands()),
                  "pool_feature shape mismatch");
  for (int b = 0; b < fb.bands(); ++b) {
    const auto& s = fb.support(b);
    double acc = 0.0;
    for (int f = s.first; f <= s.last; ++f) acc += fb.weight(b, f) * feature[f];
    out[b] = acc / fb.norm(b);
  }
}

inline std::vector<double> pool_feature(std::span<const double> feature, const ErbFilterbank& fb) {
  std::vector<double> out(static_cast<std::size_t>(fb.bands()));
  pool_feature(feature, fb, out);
  return out;
}

}  // namespace lstsc
