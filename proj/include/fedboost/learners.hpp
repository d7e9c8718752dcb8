#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedboost/core.hpp"

namespace fedboost {

// A fitted weak hypothesis. Immutable once built; safe to share across threads.
class WeakModel {
 public:
  virtual ~WeakModel() = default;

  virtual std::string_view family_id() const = 0;
  virtual std::uint32_t format_version() const { return 1; }
  virtual std::size_t num_features() const = 0;
  virtual Bytes encode() const = 0;

  /// Throws ArityMismatch when x does not have num_features() entries.
  ClassId predict(std::span<const double> x) const;

 protected:
  virtual ClassId predict_unchecked(std::span<const double> x) const = 0;
};

using WeakModelPtr = std::shared_ptr<const WeakModel>;

// ---------------------------------------------------------------------------
// Built-in families. Payload layouts are documented in docs/payload_layouts.md.

class StumpModel final : public WeakModel {
 public:
  static constexpr std::string_view kFamily = "stump";

  /// Split stump: x[feature] <= threshold -> left, else right.
  StumpModel(std::uint32_t num_features, std::uint32_t feature, double threshold, ClassId left,
             ClassId right);
  /// Constant classifier.
  StumpModel(std::uint32_t num_features, ClassId constant);

  static std::shared_ptr<const StumpModel> decode(std::span<const std::uint8_t> payload);

  std::string_view family_id() const override { return kFamily; }
  std::size_t num_features() const override { return num_features_; }
  Bytes encode() const override;

  bool is_constant() const { return constant_; }
  std::uint32_t feature() const { return feature_; }
  double threshold() const { return threshold_; }
  ClassId left() const { return left_; }
  ClassId right() const { return right_; }

 protected:
  ClassId predict_unchecked(std::span<const double> x) const override;

 private:
  bool constant_ = false;
  std::uint32_t num_features_;
  std::uint32_t feature_ = 0;
  double threshold_ = 0.0;
  ClassId left_ = 0;
  ClassId right_ = 0;
};

class TreeModel final : public WeakModel {
 public:
  static constexpr std::string_view kFamily = "tree";

  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    ClassId label = 0;

    bool is_leaf() const { return feature < 0; }
    friend bool operator==(const Node&, const Node&) = default;
  };

  TreeModel(std::uint32_t num_features, std::vector<Node> nodes);
  static std::shared_ptr<const TreeModel> decode(std::span<const std::uint8_t> payload);

  std::string_view family_id() const override { return kFamily; }
  std::size_t num_features() const override { return num_features_; }
  Bytes encode() const override;

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t num_leaves() const;

 protected:
  ClassId predict_unchecked(std::span<const double> x) const override;

 private:
  std::uint32_t num_features_;
  std::vector<Node> nodes_;
};

class GaussianNbModel final : public WeakModel {
 public:
  static constexpr std::string_view kFamily = "gaussian_nb";
  static constexpr double kVarianceFloor = 1e-9;

  struct ClassStats {
    bool present = false;
    double log_prior = 0.0;
    std::vector<double> mean;
    std::vector<double> variance;
  };

  GaussianNbModel(std::uint32_t num_features, std::vector<ClassStats> classes);
  static std::shared_ptr<const GaussianNbModel> decode(std::span<const std::uint8_t> payload);

  std::string_view family_id() const override { return kFamily; }
  std::size_t num_features() const override { return num_features_; }
  Bytes encode() const override;

  const std::vector<ClassStats>& classes() const { return classes_; }
  /// Unnormalized log posterior of class c at x; -inf for absent classes.
  double log_joint(std::size_t c, std::span<const double> x) const;

 protected:
  ClassId predict_unchecked(std::span<const double> x) const override;

 private:
  std::uint32_t num_features_;
  std::vector<ClassStats> classes_;
};

class KnnModel final : public WeakModel {
 public:
  static constexpr std::string_view kFamily = "knn";

  KnnModel(std::uint32_t k, FeatureMatrix points, std::vector<ClassId> labels);
  static std::shared_ptr<const KnnModel> decode(std::span<const std::uint8_t> payload);

  std::string_view family_id() const override { return kFamily; }
  std::size_t num_features() const override { return points_.cols(); }
  Bytes encode() const override;

  std::uint32_t k() const { return k_; }
  const FeatureMatrix& points() const { return points_; }
  const std::vector<ClassId>& labels() const { return labels_; }

 protected:
  ClassId predict_unchecked(std::span<const double> x) const override;

 private:
  std::uint32_t k_;
  FeatureMatrix points_;
  std::vector<ClassId> labels_;
};

// ---------------------------------------------------------------------------
// Registry and the uniform fit/encode/decode interface.

struct LearnerFamily {
  std::string family_id;
  std::uint32_t format_version = 1;
  /// Hyperparameter names with their defaults.
  std::map<std::string, double> defaults;
  /// Extra per-family validation of the (defaults-filled) hyperparameters.
  std::function<void(const std::map<std::string, double>&)> validate;
  std::function<WeakModelPtr(const LearnerSpec&, const DatasetShard&, std::span<const double>,
                             std::uint64_t)>
      fit;
  std::function<WeakModelPtr(std::span<const std::uint8_t>)> decode;
};

/// Adds a family (or replaces one with the same id). The built-in families are
/// registered on first use.
void register_family(LearnerFamily family);
std::vector<std::string> registered_families();
bool is_registered(std::string_view family_id);

/// Throws UnknownFamily or BadValue (unknown hyperparameter, max_leaves < 2, k < 1, ...).
void validate_learner_spec(const LearnerSpec& spec);
/// spec with every missing hyperparameter set to its default.
LearnerSpec resolve_spec(const LearnerSpec& spec);

/// Weights rescaled to sum to one. The sum is taken in binary128, so a uniform
/// vector maps to the same bits whatever its scale.
std::vector<double> normalized_weights(const WeightVector& weights);

/// Deterministic in (spec, shard, weights, seed). Weights are only used up to
/// scale. N = 0 throws DegenerateShard; a single-class shard yields a
/// constant classifier.
WeakModelPtr fit_model(const LearnerSpec& spec, const DatasetShard& shard,
                       const WeightVector& weights, std::uint64_t seed);
WeakModelEnvelope fit_weighted(const LearnerSpec& spec, const DatasetShard& shard,
                               const WeightVector& weights, std::uint64_t seed);

WeakModelEnvelope to_envelope(const WeakModel& model, CollaboratorId origin = 0,
                              std::uint32_t round = 0);
/// Throws UnknownFamily, VersionUnsupported or MalformedPayload.
WeakModelPtr decode_model(std::string_view family_id, std::uint32_t format_version,
                          std::span<const std::uint8_t> payload);
WeakModelPtr decode_model(const WeakModelEnvelope& env);

/// Weighted error (sum of weights of mispredicted samples) of `model` on `shard`.
double weighted_error(const WeakModel& model, const DatasetShard& shard,
                      std::span<const double> weights);

/// Weighted majority label (ties to the smallest id).
ClassId weighted_majority(std::span<const ClassId> labels, std::span<const double> weights,
                          std::uint32_t num_classes);

}  // namespace fedboost
