#include <algorithm>
#include <random>

#include <fmt/format.h>

#include "families.hpp"

namespace fedboost {

KnnModel::KnnModel(std::uint32_t k, FeatureMatrix points, std::vector<ClassId> labels)
    : k_(k), points_(std::move(points)), labels_(std::move(labels)) {
  if (k_ < 1) throw Error(ErrorCode::kInvalidArgument, "knn needs k >= 1");
  if (labels_.empty() || labels_.size() != points_.rows()) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("knn: {} labels for {} points", labels_.size(), points_.rows()));
  }
}

ClassId KnnModel::predict_unchecked(std::span<const double> x) const {
  const std::size_t n = points_.rows();
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto p = points_.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double diff = p[j] - x[j];
      s += diff * diff;
    }
    dist[i] = {s, i};
  }
  const std::size_t k = std::min<std::size_t>(k_, n);
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  ClassId max_label = 0;
  for (std::size_t i = 0; i < k; ++i) max_label = std::max(max_label, labels_[dist[i].second]);
  std::vector<std::uint32_t> votes(max_label + 1, 0);
  for (std::size_t i = 0; i < k; ++i) ++votes[labels_[dist[i].second]];
  return static_cast<ClassId>(detail::argmax_first(votes));
}

// [num_features: u32][k: u32][count: u32] then per point [label: u32][x: f64 x d]
Bytes KnnModel::encode() const {
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(points_.cols()));
  w.u32(k_);
  w.u32(static_cast<std::uint32_t>(points_.rows()));
  for (std::size_t i = 0; i < points_.rows(); ++i) {
    w.u32(labels_[i]);
    for (double v : points_.row(i)) w.f64(v);
  }
  return std::move(w).take();
}

std::shared_ptr<const KnnModel> KnnModel::decode(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  auto arity = r.u32();
  auto k = r.u32();
  auto count = r.u32();
  const std::uint64_t expected = static_cast<std::uint64_t>(count) * (4 + 8ull * arity);
  if (count == 0 || expected != r.remaining()) {
    throw Error(ErrorCode::kMalformedPayload,
                fmt::format("knn payload: {} points need {} bytes, have {}", count, expected,
                            r.remaining()));
  }
  FeatureMatrix points(count, arity);
  std::vector<ClassId> labels(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    labels[i] = r.u32();
    for (auto& v : points.row(i)) v = r.f64();
  }
  detail::check_payload_done(r, kFamily);
  if (k < 1) throw Error(ErrorCode::kMalformedPayload, "knn payload with k = 0");
  return std::make_shared<KnnModel>(k, std::move(points), std::move(labels));
}

namespace detail {

namespace {

// kNN has no native sample weights: train on a weighted bootstrap of size N.
WeakModelPtr fit_knn(const LearnerSpec& spec, const DatasetShard& shard,
                     std::span<const double> p, std::uint64_t seed) {
  const auto k = static_cast<std::uint32_t>(integral_param(spec.hyperparameters, "k", 1));
  const std::size_t n = shard.size();
  std::vector<double> cumulative(n);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += p[i];
    cumulative[i] = acc;
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> picks(n);
  for (auto& pick : picks) {
    const double u = unit_uniform(rng) * acc;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    pick = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), n - 1);
  }
  auto sample = shard.select(picks);
  return std::make_shared<KnnModel>(k, std::move(sample.features), std::move(sample.labels));
}

}  // namespace

LearnerFamily knn_family() {
  LearnerFamily f;
  f.family_id = std::string(KnnModel::kFamily);
  f.defaults = {{"k", 5.0}};
  f.validate = [](const std::map<std::string, double>& params) {
    (void)integral_param(params, "k", 1);
  };
  f.fit = fit_knn;
  f.decode = [](std::span<const std::uint8_t> b) -> WeakModelPtr { return KnnModel::decode(b); };
  return f;
}

}  // namespace detail
}  // namespace fedboost
