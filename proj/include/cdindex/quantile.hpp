#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace cdindex {

/// Linear interpolation between order statistics (Hyndman-Fan type 7).
/// `sorted` must be ascending and non-empty; p in [0, 1].
inline double quantile_sorted(std::span<const double> sorted, double p) {
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace cdindex
