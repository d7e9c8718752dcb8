#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "families.hpp"

namespace fedboost {

StumpModel::StumpModel(std::uint32_t num_features, std::uint32_t feature, double threshold,
                       ClassId left, ClassId right)
    : num_features_(num_features), feature_(feature), threshold_(threshold), left_(left),
      right_(right) {
  if (feature >= num_features) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("stump feature {} out of range for arity {}", feature, num_features));
  }
}

StumpModel::StumpModel(std::uint32_t num_features, ClassId constant)
    : constant_(true), num_features_(num_features), left_(constant), right_(constant) {}

ClassId StumpModel::predict_unchecked(std::span<const double> x) const {
  if (constant_) return left_;
  return x[feature_] <= threshold_ ? left_ : right_;
}

// [constant: u8][num_features: u32][feature: u32][threshold: f64][left: u32][right: u32]
Bytes StumpModel::encode() const {
  ByteWriter w;
  w.u8(constant_ ? 1 : 0);
  w.u32(num_features_);
  w.u32(feature_);
  w.f64(threshold_);
  w.u32(left_);
  w.u32(right_);
  return std::move(w).take();
}

std::shared_ptr<const StumpModel> StumpModel::decode(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  auto constant = r.u8();
  auto arity = r.u32();
  auto feature = r.u32();
  auto threshold = r.f64();
  auto left = r.u32();
  auto right = r.u32();
  detail::check_payload_done(r, kFamily);
  if (constant > 1) throw Error(ErrorCode::kMalformedPayload, "stump constant flag must be 0 or 1");
  if (constant) {
    if (left != right) throw Error(ErrorCode::kMalformedPayload, "constant stump with two labels");
    return std::make_shared<StumpModel>(arity, left);
  }
  if (feature >= arity) throw Error(ErrorCode::kMalformedPayload, "stump feature out of range");
  return std::make_shared<StumpModel>(arity, feature, threshold, left, right);
}

namespace detail {

namespace {

// Best single axis-aligned split by weighted misclassification error.
WeakModelPtr fit_stump(const LearnerSpec&, const DatasetShard& shard, std::span<const double> p,
                       std::uint64_t) {
  const std::size_t n = shard.size();
  const std::size_t d = shard.num_features();
  const std::uint32_t k = shard.num_classes;
  const auto arity = static_cast<std::uint32_t>(d);

  std::vector<double> totals(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) totals[shard.labels[i]] += p[i];
  const double total = std::accumulate(totals.begin(), totals.end(), 0.0);
  const auto constant_label = static_cast<ClassId>(argmax_first(totals));
  const double eps = 1e-12 * total;

  double best_err = total - totals[constant_label];
  bool found = false;
  std::uint32_t best_feature = 0;
  double best_threshold = 0.0;
  ClassId best_left = constant_label, best_right = constant_label;

  std::vector<std::size_t> order(n);
  std::vector<double> left(k), right(k);
  for (std::size_t f = 0; f < d; ++f) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      double xa = shard.features(a, f), xb = shard.features(b, f);
      return xa < xb || (xa == xb && a < b);
    });
    std::fill(left.begin(), left.end(), 0.0);
    for (std::size_t pos = 0; pos + 1 < n; ++pos) {
      const std::size_t i = order[pos];
      left[shard.labels[i]] += p[i];
      const double a = shard.features(i, f);
      const double b = shard.features(order[pos + 1], f);
      if (a == b) continue;
      for (std::uint32_t c = 0; c < k; ++c) right[c] = totals[c] - left[c];
      auto l = static_cast<ClassId>(argmax_first(left));
      auto r = static_cast<ClassId>(argmax_first(right));
      if (l == r) continue;
      double err = total - left[l] - right[r];
      if (err < best_err - eps) {
        best_err = err;
        found = true;
        best_feature = static_cast<std::uint32_t>(f);
        best_threshold = std::midpoint(a, b);
        best_left = l;
        best_right = r;
      }
    }
  }
  if (!found) return std::make_shared<StumpModel>(arity, constant_label);
  return std::make_shared<StumpModel>(arity, best_feature, best_threshold, best_left, best_right);
}

}  // namespace

LearnerFamily stump_family() {
  LearnerFamily f;
  f.family_id = std::string(StumpModel::kFamily);
  f.fit = fit_stump;
  f.decode = [](std::span<const std::uint8_t> b) -> WeakModelPtr { return StumpModel::decode(b); };
  return f;
}

}  // namespace detail
}  // namespace fedboost
