#pragma once

#include <cstddef>
#include <span>

namespace cdindex {

/// Pairwise (tree) summation. Error grows as O(log n) rather than O(n), and
/// the result depends only on the sequence, never on scheduling.
inline double pairwise_sum(std::span<const double> values) noexcept {
  constexpr std::size_t kLeaf = 8;
  if (values.size() <= kLeaf) {
    double s = 0.0;
    for (const double v : values) s += v;
    return s;
  }
  const auto half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace cdindex
