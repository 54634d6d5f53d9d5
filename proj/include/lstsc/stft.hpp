#pragma once

// Framing, one-sided STFT, weighted overlap-add synthesis and spectral masks.
//
// Frame l covers samples [l * hop, l * hop + frame_len); there is no
// pre-padding. The analysis window is the square-root periodic Hann (a sine
// window). Synthesis uses its canonical dual window, so that
// sum_l w_a(n - l*hop) * w_s(n - l*hop) == 1 wherever frames fully overlap.

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "lstsc/error.hpp"

namespace lstsc {

using Complex = std::complex<double>;

struct StftConfig {
  int frame_len = 400;  // 25 ms at 16 kHz
  int hop = 160;        // 10 ms at 16 kHz
  int fft_size = 512;

  int bins() const { return fft_size / 2 + 1; }

  int frames_for(std::size_t samples) const {
    if (samples < static_cast<std::size_t>(frame_len)) return 0;
    return 1 + static_cast<int>((samples - static_cast<std::size_t>(frame_len)) /
                                static_cast<std::size_t>(hop));
  }

  void validate() const {
    detail::require(hop > 0 && hop <= frame_len && frame_len <= fft_size,
                    "STFT config needs 0 < hop <= frame_len <= fft_size");
    detail::require(fft_size % 2 == 0, "fft_size must be even");
  }

  friend bool operator==(const StftConfig&, const StftConfig&) = default;
};

inline std::vector<double> analysis_window(const StftConfig& cfg) {
  std::vector<double> w(static_cast<std::size_t>(cfg.frame_len));
  for (int n = 0; n < cfg.frame_len; ++n) {
    w[static_cast<std::size_t>(n)] = std::sin(std::numbers::pi * n / cfg.frame_len);
  }
  return w;
}

// Dual of the analysis window for weighted overlap-add at the given hop.
inline std::vector<double> synthesis_window(const StftConfig& cfg) {
  cfg.validate();
  const std::vector<double> wa = analysis_window(cfg);
  std::vector<double> overlap(static_cast<std::size_t>(cfg.hop), 0.0);
  for (int n = 0; n < cfg.frame_len; ++n) {
    overlap[static_cast<std::size_t>(n % cfg.hop)] += wa[n] * wa[n];
  }
  std::vector<double> ws(wa.size());
  for (int n = 0; n < cfg.frame_len; ++n) {
    const double s = overlap[static_cast<std::size_t>(n % cfg.hop)];
    detail::require(s > 0.0, "window pair has no overlap-add support at this hop");
    ws[n] = wa[n] / s;
  }
  return ws;
}

// L x F complex matrix, row-major (one row per frame).
class ComplexSpectrogram {
 public:
  ComplexSpectrogram() = default;
  ComplexSpectrogram(int frames, int bins)
      : frames_(frames), bins_(bins), data_(static_cast<std::size_t>(frames) * bins) {
    detail::require(frames >= 0 && bins > 0, "invalid spectrogram shape");
  }

  int frames() const { return frames_; }
  int bins() const { return bins_; }

  Complex& at(int l, int f) { return data_[index(l, f)]; }
  const Complex& at(int l, int f) const { return data_[index(l, f)]; }

  std::span<Complex> row(int l) { return {data_.data() + index(l, 0), std::size_t(bins_)}; }
  std::span<const Complex> row(int l) const {
    return {data_.data() + index(l, 0), std::size_t(bins_)};
  }
  std::span<const Complex> data() const { return data_; }
  std::span<Complex> data() { return data_; }

  friend bool operator==(const ComplexSpectrogram&, const ComplexSpectrogram&) = default;

 private:
  std::size_t index(int l, int f) const {
    return static_cast<std::size_t>(l) * static_cast<std::size_t>(bins_) +
           static_cast<std::size_t>(f);
  }

  int frames_ = 0;
  int bins_ = 0;
  std::vector<Complex> data_;
};

// Soft TF mask, every entry in [0, 1].
class Mask {
 public:
  Mask() = default;
  Mask(int frames, int bins, double fill = 0.0)
      : frames_(frames), bins_(bins), data_(static_cast<std::size_t>(frames) * bins, fill) {
    detail::require(frames >= 0 && bins > 0, "invalid mask shape");
    check_range(data_);
  }
  Mask(int frames, int bins, std::vector<double> values)
      : frames_(frames), bins_(bins), data_(std::move(values)) {
    detail::require(frames >= 0 && bins > 0, "invalid mask shape");
    detail::require(data_.size() == static_cast<std::size_t>(frames) * bins,
                    "mask data does not match its shape");
    check_range(data_);
  }

  int frames() const { return frames_; }
  int bins() const { return bins_; }
  double at(int l, int f) const { return data_[static_cast<std::size_t>(l) * bins_ + f]; }
  std::span<const double> row(int l) const {
    return {data_.data() + static_cast<std::size_t>(l) * bins_, std::size_t(bins_)};
  }
  std::span<const double> data() const { return data_; }

  void set_row(int l, std::span<const double> values) {
    detail::require(values.size() == static_cast<std::size_t>(bins_), "mask row length mismatch");
    check_range(values);
    std::copy(values.begin(), values.end(), data_.begin() + static_cast<std::ptrdiff_t>(l) * bins_);
  }

  static void check_range(std::span<const double> values) {
    for (double v : values) {
      // Written so that NaN is rejected as well.
      if (!(v >= 0.0 && v <= 1.0)) {
        detail::fail(ErrorKind::kInvalidArgument, "mask entry outside [0, 1]");
      }
    }
  }

 private:
  int frames_ = 0;
  int bins_ = 0;
  std::vector<double> data_;
};

inline ComplexSpectrogram stft(std::span<const double> signal, const StftConfig& cfg = {}) {
  cfg.validate();
  if (signal.size() < static_cast<std::size_t>(cfg.frame_len)) {
    detail::fail(ErrorKind::kInvalidArgument, "signal shorter than one frame");
  }
  const int frames = cfg.frames_for(signal.size());
  const int bins = cfg.bins();
  const std::vector<double> window = analysis_window(cfg);

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> buffer(static_cast<std::size_t>(cfg.fft_size), 0.0);
  std::vector<Complex> spectrum;

  ComplexSpectrogram out(frames, bins);
  for (int l = 0; l < frames; ++l) {
    const std::size_t start = static_cast<std::size_t>(l) * cfg.hop;
    for (int n = 0; n < cfg.frame_len; ++n) buffer[n] = signal[start + n] * window[n];
    fft.fwd(spectrum, buffer);
    std::copy_n(spectrum.begin(), bins, out.row(l).begin());
  }
  return out;
}

// Weighted overlap-add. The result has (L - 1) * hop + frame_len samples
// unless `length` is given, in which case it is trimmed or zero-extended.
inline std::vector<double> istft(const ComplexSpectrogram& spec, const StftConfig& cfg = {},
                                 std::size_t length = 0) {
  cfg.validate();
  if (spec.bins() != cfg.bins()) {
    detail::fail(ErrorKind::kInvalidArgument, "spectrogram bin count does not match STFT config");
  }
  const std::vector<double> window = synthesis_window(cfg);
  const std::size_t natural =
      spec.frames() == 0 ? 0
                         : static_cast<std::size_t>(spec.frames() - 1) * cfg.hop + cfg.frame_len;
  std::vector<double> out(std::max(natural, length), 0.0);

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<Complex> half(static_cast<std::size_t>(cfg.bins()));
  std::vector<double> frame;
  for (int l = 0; l < spec.frames(); ++l) {
    const auto row = spec.row(l);
    std::copy(row.begin(), row.end(), half.begin());
    // A real signal has real DC and Nyquist terms.
    half.front().imag(0.0);
    half.back().imag(0.0);
    fft.inv(frame, half, cfg.fft_size);
    const std::size_t start = static_cast<std::size_t>(l) * cfg.hop;
    for (int n = 0; n < cfg.frame_len; ++n) out[start + n] += frame[n] * window[n];
  }
  if (length > 0) out.resize(length);
  return out;
}

inline ComplexSpectrogram apply_mask(const ComplexSpectrogram& spec, const Mask& mask) {
  if (spec.frames() != mask.frames() || spec.bins() != mask.bins()) {
    detail::fail(ErrorKind::kInvalidArgument, "mask shape does not match spectrogram");
  }
  ComplexSpectrogram out = spec;
  auto values = out.data();
  const auto gains = mask.data();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] *= gains[i];
  return out;
}

// Samples [0, frame_len - hop) and the tail after the last full overlap are
// only partially covered by frames; reconstruction is exact only in between.
struct InteriorRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};

inline InteriorRange interior_range(const StftConfig& cfg, int frames) {
  if (frames <= 0) return {};
  const std::size_t begin = static_cast<std::size_t>(cfg.frame_len - cfg.hop);
  const std::size_t end = static_cast<std::size_t>(frames - 1) * cfg.hop + cfg.hop;
  return {begin, std::max(begin, end)};
}

}  // namespace lstsc
