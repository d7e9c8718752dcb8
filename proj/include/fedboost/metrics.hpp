#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "fedboost/core.hpp"

namespace fedboost {

/// Unweighted mean of per-class F1 over classes 0..K-1. A class absent from
/// both predictions and labels counts as 1.0. Throws LengthMismatch.
double f1_macro(std::span<const ClassId> predictions, std::span<const ClassId> labels,
                std::uint32_t num_classes);

/// Macro F1 of always predicting the most frequent label (ties to the smallest id).
double majority_baseline_f1(std::span<const ClassId> labels, std::uint32_t num_classes);

struct MetricRecord {
  std::uint32_t round = 0;
  std::optional<CollaboratorId> collaborator;  // nullopt: global
  std::string name;
  double value = 0.0;

  friend bool operator==(const MetricRecord&, const MetricRecord&) = default;
};

}  // namespace fedboost
