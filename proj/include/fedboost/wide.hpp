#pragma once

#include <span>

namespace fedboost {

/// IEEE binary128. Weight sums are accumulated and shipped in this width so
/// that a sum of N equal doubles is exact (53 + log2 N <= 113 bits), which
/// makes the first boosting round bit-identical under any uniform rescaling
/// of the initial weights.
using WideReal = __float128;

inline double to_double(WideReal v) { return static_cast<double>(v); }

inline WideReal wide_sum(std::span<const double> values) {
  WideReal acc = 0;
  for (double v : values) acc += v;
  return acc;
}

}  // namespace fedboost
