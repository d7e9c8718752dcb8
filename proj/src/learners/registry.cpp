#include <cmath>
#include <map>
#include <mutex>
#include <shared_mutex>

#include <fmt/format.h>

#include "families.hpp"
#include "fedboost/learners.hpp"

namespace fedboost {

namespace {

class Registry {
 public:
  Registry() {
    for (auto&& f : {detail::stump_family(), detail::tree_family(), detail::gaussian_nb_family(),
                     detail::knn_family()}) {
      families_[f.family_id] = f;
    }
  }

  void add(LearnerFamily family) {
    std::unique_lock lock(mu_);
    families_[family.family_id] = std::move(family);
  }

  LearnerFamily get(std::string_view id) const {
    std::shared_lock lock(mu_);
    auto it = families_.find(std::string(id));
    if (it == families_.end()) {
      throw Error(ErrorCode::kUnknownFamily, fmt::format("learner family '{}' is not registered", id));
    }
    return it->second;
  }

  bool contains(std::string_view id) const {
    std::shared_lock lock(mu_);
    return families_.count(std::string(id)) > 0;
  }

  std::vector<std::string> ids() const {
    std::shared_lock lock(mu_);
    std::vector<std::string> out;
    for (const auto& [id, _] : families_) out.push_back(id);
    return out;
  }

 private:
  mutable std::shared_mutex mu_;
  std::map<std::string, LearnerFamily> families_;
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

namespace detail {

std::int64_t integral_param(const std::map<std::string, double>& params, const std::string& name,
                            std::int64_t min) {
  double v = params.at(name);
  if (!std::isfinite(v) || v != std::floor(v)) {
    throw Error(ErrorCode::kBadValue, fmt::format("hyperparameter {} must be an integer, got {}", name, v));
  }
  if (v < static_cast<double>(min)) {
    throw Error(ErrorCode::kBadValue, fmt::format("hyperparameter {} must be >= {}, got {}", name, min, v));
  }
  return static_cast<std::int64_t>(v);
}

void check_payload_done(const ByteReader& r, std::string_view family) {
  r.expect_done(fmt::format("{} payload", family));
}

}  // namespace detail

ClassId WeakModel::predict(std::span<const double> x) const {
  if (x.size() != num_features()) {
    throw Error(ErrorCode::kArityMismatch,
                fmt::format("{} model expects {} features, got {}", family_id(), num_features(),
                            x.size()));
  }
  return predict_unchecked(x);
}

void register_family(LearnerFamily family) { registry().add(std::move(family)); }

std::vector<std::string> registered_families() { return registry().ids(); }

bool is_registered(std::string_view family_id) { return registry().contains(family_id); }

LearnerSpec resolve_spec(const LearnerSpec& spec) {
  auto family = registry().get(spec.family_id);
  LearnerSpec out = spec;
  for (const auto& [name, value] : spec.hyperparameters) {
    if (!family.defaults.count(name)) {
      throw Error(ErrorCode::kBadValue,
                  fmt::format("learner '{}' has no hyperparameter '{}'", spec.family_id, name));
    }
  }
  for (const auto& [name, value] : family.defaults) out.hyperparameters.try_emplace(name, value);
  if (family.validate) family.validate(out.hyperparameters);
  return out;
}

void validate_learner_spec(const LearnerSpec& spec) { (void)resolve_spec(spec); }

std::vector<double> normalized_weights(const WeightVector& weights) {
  const WideReal total = weights.exact_norm();
  std::vector<double> out(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out[i] = to_double(static_cast<WideReal>(weights[i]) / total);
  }
  return out;
}

WeakModelPtr fit_model(const LearnerSpec& spec, const DatasetShard& shard,
                       const WeightVector& weights, std::uint64_t seed) {
  auto resolved = resolve_spec(spec);
  if (shard.size() == 0) {
    throw Error(ErrorCode::kDegenerateShard, "cannot fit on an empty shard");
  }
  if (weights.size() != shard.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                fmt::format("{} weights for {} samples", weights.size(), shard.size()));
  }
  auto family = registry().get(resolved.family_id);
  return family.fit(resolved, shard, normalized_weights(weights), seed);
}

WeakModelEnvelope fit_weighted(const LearnerSpec& spec, const DatasetShard& shard,
                               const WeightVector& weights, std::uint64_t seed) {
  return to_envelope(*fit_model(spec, shard, weights, seed));
}

WeakModelEnvelope to_envelope(const WeakModel& model, CollaboratorId origin, std::uint32_t round) {
  WeakModelEnvelope env;
  env.family_id = std::string(model.family_id());
  env.format_version = model.format_version();
  env.payload = model.encode();
  env.origin_id = origin;
  env.round = round;
  return env;
}

WeakModelPtr decode_model(std::string_view family_id, std::uint32_t format_version,
                          std::span<const std::uint8_t> payload) {
  auto family = registry().get(family_id);
  if (format_version != family.format_version) {
    throw Error(ErrorCode::kVersionUnsupported,
                fmt::format("{} payload version {} (supported: {})", family_id, format_version,
                            family.format_version));
  }
  return family.decode(payload);
}

WeakModelPtr decode_model(const WeakModelEnvelope& env) {
  return decode_model(env.family_id, env.format_version, env.payload);
}

double weighted_error(const WeakModel& model, const DatasetShard& shard,
                      std::span<const double> weights) {
  double err = 0.0;
  for (std::size_t i = 0; i < shard.size(); ++i) {
    if (model.predict(shard.features.row(i)) != shard.labels[i]) err += weights[i];
  }
  return err;
}

ClassId weighted_majority(std::span<const ClassId> labels, std::span<const double> weights,
                          std::uint32_t num_classes) {
  std::vector<double> totals(num_classes, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) totals[labels[i]] += weights[i];
  return static_cast<ClassId>(detail::argmax_first(totals));
}

}  // namespace fedboost
