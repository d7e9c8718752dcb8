#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fedboost/bytes.hpp"
#include "fedboost/error.hpp"
#include "fedboost/wide.hpp"

namespace fedboost {

using ClassId = std::uint32_t;
using CollaboratorId = std::uint32_t;

// Dense row-major matrix of 64-bit features.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const std::vector<double>& data() const { return data_; }

  /// Rows `indices` in the given order.
  FeatureMatrix select_rows(std::span<const std::size_t> indices) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// A collaborator's local labeled data.
struct DatasetShard {
  FeatureMatrix features;
  std::vector<ClassId> labels;
  std::uint32_t num_classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t num_features() const { return features.cols(); }
  DatasetShard select(std::span<const std::size_t> indices) const;
};

/// Throws ShapeMismatch, LabelOutOfRange(row) or NonFiniteFeature(row, col).
void validate_shard(const DatasetShard& shard);

// Family-tagged serialized weak hypothesis.
struct WeakModelEnvelope {
  std::string family_id;
  std::uint32_t format_version = 1;
  Bytes payload;
  CollaboratorId origin_id = 0;
  std::uint32_t round = 0;

  friend bool operator==(const WeakModelEnvelope&, const WeakModelEnvelope&) = default;
};

/// Canonical layout: [family_id: str8][format_version: u32][payload: u64 len + bytes].
/// origin_id and round are not part of it; they travel in the enclosing message.
Bytes encode_envelope(const WeakModelEnvelope& env);
WeakModelEnvelope decode_envelope(std::span<const std::uint8_t> bytes);
void write_envelope(ByteWriter& w, const WeakModelEnvelope& env);
WeakModelEnvelope read_envelope(ByteReader& r);

// Per-sample boosting weights; strictly positive and finite.
class WeightVector {
 public:
  WeightVector() = default;
  explicit WeightVector(std::vector<double> weights);
  static WeightVector uniform(std::size_t n, double value = 1.0);

  std::span<const double> values() const { return weights_; }
  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  double norm() const { return to_double(norm_); }
  WideReal exact_norm() const { return norm_; }

 private:
  std::vector<double> weights_;
  WideReal norm_ = 0;
};

class Bitmap {
 public:
  Bitmap() = default;
  explicit Bitmap(std::size_t bits) : bits_(bits), bytes_((bits + 7) / 8, 0) {}
  Bitmap(std::size_t bits, Bytes packed);

  std::size_t size() const { return bits_; }
  bool test(std::size_t i) const { return (bytes_[i >> 3] >> (i & 7)) & 1u; }
  void set(std::size_t i) { bytes_[i >> 3] |= static_cast<std::uint8_t>(1u << (i & 7)); }
  std::size_t count() const;
  const Bytes& packed() const { return bytes_; }

  friend bool operator==(const Bitmap&, const Bitmap&) = default;

 private:
  std::size_t bits_ = 0;
  Bytes bytes_;
};

// Weighted errors of every broadcast hypothesis on one collaborator's data.
struct ErrorReport {
  std::uint32_t round = 0;
  std::vector<WideReal> errors;
  WideReal weight_norm = 0;
  std::vector<Bitmap> mispredictions;

  std::vector<double> errors_as_double() const;
};

/// Checks 0 <= errors[j] <= weight_norm and that errors[j] matches the weight
/// sum over the set bits of mispredictions[j] (relative 1e-9).
void check_report_consistency(const ErrorReport& report, const WeightVector& weights);

struct RoundDecision {
  std::uint32_t round = 0;
  std::uint32_t best_index = 0;
  double alpha = 0.0;
  double global_error = 0.0;
  WideReal global_norm = 0;

  friend bool operator==(const RoundDecision& a, const RoundDecision& b) {
    return a.round == b.round && a.best_index == b.best_index && a.alpha == b.alpha &&
           a.global_error == b.global_error && a.global_norm == b.global_norm;
  }
};

enum class FederationMode { kAdaBoostF, kBagging };
std::string_view to_string(FederationMode mode);
FederationMode parse_mode(std::string_view s);

struct LearnerSpec {
  std::string family_id;
  std::map<std::string, double> hyperparameters;

  friend bool operator==(const LearnerSpec&, const LearnerSpec&) = default;
};

struct FederationConfig {
  std::uint32_t num_collaborators = 1;
  std::uint32_t rounds = 1;
  FederationMode mode = FederationMode::kAdaBoostF;
  LearnerSpec learner;
  std::uint64_t seed = 0;

  friend bool operator==(const FederationConfig&, const FederationConfig&) = default;
};

void validate_config(const FederationConfig& config);

/// Seed for a fit by `collaborator` in `round`, derived from the federation seed.
std::uint64_t derive_seed(std::uint64_t seed, CollaboratorId collaborator, std::uint32_t round);

}  // namespace fedboost
