#include "fedboost/metrics.hpp"

#include <algorithm>
#include <vector>

#include <fmt/format.h>

namespace fedboost {

double f1_macro(std::span<const ClassId> predictions, std::span<const ClassId> labels,
                std::uint32_t num_classes) {
  if (predictions.size() != labels.size()) {
    throw Error(ErrorCode::kLengthMismatch, fmt::format("{} predictions for {} labels",
                                                        predictions.size(), labels.size()));
  }
  if (num_classes == 0) throw Error(ErrorCode::kInvalidArgument, "num_classes must be positive");
  std::vector<std::size_t> tp(num_classes), predicted(num_classes), actual(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (predictions[i] >= num_classes || labels[i] >= num_classes) {
      throw Error(ErrorCode::kLabelOutOfRange, fmt::format("class id out of range at {}", i),
                  {.row = i});
    }
    ++predicted[predictions[i]];
    ++actual[labels[i]];
    if (predictions[i] == labels[i]) ++tp[labels[i]];
  }
  double sum = 0.0;
  for (std::uint32_t c = 0; c < num_classes; ++c) {
    const auto denom = predicted[c] + actual[c];
    sum += denom == 0 ? 1.0 : 2.0 * static_cast<double>(tp[c]) / static_cast<double>(denom);
  }
  return sum / num_classes;
}

double majority_baseline_f1(std::span<const ClassId> labels, std::uint32_t num_classes) {
  std::vector<std::size_t> counts(num_classes);
  for (auto y : labels) ++counts.at(y);
  const auto majority =
      static_cast<ClassId>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  std::vector<ClassId> pred(labels.size(), majority);
  return f1_macro(pred, labels, num_classes);
}

}  // namespace fedboost
