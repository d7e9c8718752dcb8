#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "families.hpp"

namespace fedboost {

GaussianNbModel::GaussianNbModel(std::uint32_t num_features, std::vector<ClassStats> classes)
    : num_features_(num_features), classes_(std::move(classes)) {
  bool any = false;
  for (const auto& c : classes_) {
    if (!c.present) continue;
    any = true;
    if (c.mean.size() != num_features_ || c.variance.size() != num_features_) {
      throw Error(ErrorCode::kMalformedPayload, "gaussian_nb class statistics have wrong arity");
    }
    for (double v : c.variance) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw Error(ErrorCode::kMalformedPayload, "gaussian_nb variance must be positive");
      }
    }
  }
  if (!any) throw Error(ErrorCode::kInvalidArgument, "gaussian_nb needs at least one class");
}

double GaussianNbModel::log_joint(std::size_t c, std::span<const double> x) const {
  const auto& s = classes_[c];
  if (!s.present) return -std::numeric_limits<double>::infinity();
  double ll = s.log_prior;
  for (std::size_t j = 0; j < num_features_; ++j) {
    const double diff = x[j] - s.mean[j];
    ll -= 0.5 * (std::log(2.0 * std::numbers::pi * s.variance[j]) + diff * diff / s.variance[j]);
  }
  return ll;
}

ClassId GaussianNbModel::predict_unchecked(std::span<const double> x) const {
  std::size_t best = classes_.size();
  double best_ll = 0.0;
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    if (!classes_[c].present) continue;
    double ll = log_joint(c, x);
    if (best == classes_.size() || ll > best_ll) {
      best = c;
      best_ll = ll;
    }
  }
  return static_cast<ClassId>(best);
}

// [num_features: u32][num_classes: u32] then per class
// [present: u8] and, if present, [log_prior: f64][mean: f64 x d][variance: f64 x d]
Bytes GaussianNbModel::encode() const {
  ByteWriter w;
  w.u32(num_features_);
  w.u32(static_cast<std::uint32_t>(classes_.size()));
  for (const auto& c : classes_) {
    w.u8(c.present ? 1 : 0);
    if (!c.present) continue;
    w.f64(c.log_prior);
    for (double m : c.mean) w.f64(m);
    for (double v : c.variance) w.f64(v);
  }
  return std::move(w).take();
}

std::shared_ptr<const GaussianNbModel> GaussianNbModel::decode(
    std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  auto arity = r.u32();
  auto k = r.u32();
  if (k > r.remaining()) throw Error(ErrorCode::kMalformedPayload, "gaussian_nb class count");
  std::vector<ClassStats> classes(k);
  for (auto& c : classes) {
    auto flag = r.u8();
    if (flag > 1) throw Error(ErrorCode::kMalformedPayload, "gaussian_nb present flag");
    c.present = flag == 1;
    if (!c.present) continue;
    if (static_cast<std::uint64_t>(arity) * 16 + 8 > r.remaining()) {
      throw Error(ErrorCode::kMalformedPayload, "gaussian_nb payload truncated");
    }
    c.log_prior = r.f64();
    c.mean.resize(arity);
    c.variance.resize(arity);
    for (auto& m : c.mean) m = r.f64();
    for (auto& v : c.variance) v = r.f64();
  }
  detail::check_payload_done(r, kFamily);
  return std::make_shared<GaussianNbModel>(arity, std::move(classes));
}

namespace detail {

namespace {

WeakModelPtr fit_gaussian_nb(const LearnerSpec&, const DatasetShard& shard,
                             std::span<const double> p, std::uint64_t) {
  const std::size_t n = shard.size();
  const std::size_t d = shard.num_features();
  std::vector<GaussianNbModel::ClassStats> classes(shard.num_classes);
  std::vector<double> mass(shard.num_classes, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mass[shard.labels[i]] += p[i];
    total += p[i];
  }
  for (std::size_t c = 0; c < classes.size(); ++c) {
    auto& s = classes[c];
    if (!(mass[c] > 0.0)) continue;
    s.present = true;
    s.log_prior = std::log(mass[c] / total);
    s.mean.assign(d, 0.0);
    s.variance.assign(d, 0.0);
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto& s = classes[shard.labels[i]];
    auto x = shard.features.row(i);
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += p[i] * x[j];
  }
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (!classes[c].present) continue;
    for (auto& m : classes[c].mean) m /= mass[c];
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto& s = classes[shard.labels[i]];
    auto x = shard.features.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = x[j] - s.mean[j];
      s.variance[j] += p[i] * diff * diff;
    }
  }
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (!classes[c].present) continue;
    for (auto& v : classes[c].variance) {
      v = std::max(v / mass[c], GaussianNbModel::kVarianceFloor);
    }
  }
  return std::make_shared<GaussianNbModel>(static_cast<std::uint32_t>(d), std::move(classes));
}

}  // namespace

LearnerFamily gaussian_nb_family() {
  LearnerFamily f;
  f.family_id = std::string(GaussianNbModel::kFamily);
  f.fit = fit_gaussian_nb;
  f.decode = [](std::span<const std::uint8_t> b) -> WeakModelPtr {
    return GaussianNbModel::decode(b);
  };
  return f;
}

}  // namespace detail
}  // namespace fedboost
