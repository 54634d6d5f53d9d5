#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "lstsc/error.hpp"

namespace lstsc {

inline constexpr double kSiSdrCapDb = 100.0;

struct SiSdrReport {
  double value_db = 0.0;
  double projection_gain = 0.0;  // alpha in alpha * reference
};

// Scale-invariant SDR over the full signal, capped at +100 dB.
inline SiSdrReport si_sdr(std::span<const double> reference, std::span<const double> estimate) {
  detail::require(reference.size() == estimate.size(), "si_sdr: length mismatch");
  double ref_energy = 0.0;
  double dot = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    ref_energy += reference[i] * reference[i];
    dot += reference[i] * estimate[i];
  }
  detail::require(ref_energy > 0.0, "si_sdr: reference is all zero");
  const double alpha = dot / ref_energy;

  double target = 0.0;
  double residual = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double t = alpha * reference[i];
    const double e = estimate[i] - t;
    target += t * t;
    residual += e * e;
  }
  double value = kSiSdrCapDb;
  if (residual > 0.0 && target > 0.0) {
    value = std::min(kSiSdrCapDb, 10.0 * std::log10(target / residual));
  } else if (target == 0.0) {
    value = -kSiSdrCapDb;  // estimate orthogonal to the reference
  }
  return {value, alpha};
}

}  // namespace lstsc
