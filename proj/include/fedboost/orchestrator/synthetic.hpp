#pragma once

#include <cstdint>

#include "fedboost/core.hpp"

namespace fedboost {

/// Isotropic Gaussian blobs: class c is centred at a random point in
/// [-center_box, center_box]^d with unit spread scaled by `spread`. Labels are
/// assigned round-robin so class sizes differ by at most one.
DatasetShard make_blobs(std::size_t samples, std::size_t features, std::uint32_t classes,
                        double spread, std::uint64_t seed, double center_box = 5.0);

/// 10-class, 10-feature blob set with overlapping classes (1000 samples).
DatasetShard make_vowel_like(std::uint64_t seed, std::size_t samples = 1000);

/// One feature, two classes split at 0 (x < 0 -> 0, x > 0 -> 1).
DatasetShard make_separable_1d(std::size_t samples, std::uint64_t seed);

}  // namespace fedboost
