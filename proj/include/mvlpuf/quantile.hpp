// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "mvlpuf/error.hpp"

namespace mvlpuf {

/// Linear-interpolation quantile (Hyndman-Fan type 7) of an ascending sample.
inline double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty())
    throw InvalidArgument("quantile of empty sample");
  if (!(q >= 0.0 && q <= 1.0))
    throw InvalidArgument("quantile level must lie in [0, 1]");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline double median(std::vector<double> sample) {
  std::sort(sample.begin(), sample.end());
  return sorted_quantile(sample, 0.5);
}

} // namespace mvlpuf
