#pragma once

// Built-in learner families, registered by the registry on first use.

#include <random>

#include "fedboost/learners.hpp"

namespace fedboost::detail {

LearnerFamily stump_family();
LearnerFamily tree_family();
LearnerFamily gaussian_nb_family();
LearnerFamily knn_family();

/// Uniform double in [0, 1) from the top 53 bits; identical on every platform.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Index of the largest entry; ties go to the smallest index.
template <typename Range>
std::size_t argmax_first(const Range& values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

/// Reads an integral hyperparameter, rejecting non-integers and values below `min`.
std::int64_t integral_param(const std::map<std::string, double>& params, const std::string& name,
                            std::int64_t min);

void check_payload_done(const ByteReader& r, std::string_view family);

}  // namespace fedboost::detail
