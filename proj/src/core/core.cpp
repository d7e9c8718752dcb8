#include "fedboost/core.hpp"

#include <bit>
#include <cmath>

#include <fmt/format.h>

#include "fedboost/learners.hpp"

namespace fedboost {

FeatureMatrix::FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorCode::kShapeMismatch,
                fmt::format("{} values for a {}x{} matrix", data_.size(), rows_, cols_));
  }
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> indices) const {
  FeatureMatrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

DatasetShard DatasetShard::select(std::span<const std::size_t> indices) const {
  DatasetShard out;
  out.features = features.select_rows(indices);
  out.labels.reserve(indices.size());
  for (auto i : indices) out.labels.push_back(labels[i]);
  out.num_classes = num_classes;
  return out;
}

void validate_shard(const DatasetShard& shard) {
  if (shard.labels.size() != shard.features.rows()) {
    throw Error(ErrorCode::kShapeMismatch,
                fmt::format("{} labels for {} feature rows", shard.labels.size(),
                            shard.features.rows()),
                {.row = std::min(shard.labels.size(), shard.features.rows())});
  }
  if (shard.labels.empty()) {
    throw Error(ErrorCode::kShapeMismatch, "shard has no samples");
  }
  if (shard.num_classes < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("num_classes must be >= 2, got {}", shard.num_classes));
  }
  for (std::size_t i = 0; i < shard.labels.size(); ++i) {
    if (shard.labels[i] >= shard.num_classes) {
      throw Error(ErrorCode::kLabelOutOfRange,
                  fmt::format("row {}: label {} not in [0, {})", i, shard.labels[i],
                              shard.num_classes),
                  {.row = i});
    }
  }
  for (std::size_t i = 0; i < shard.features.rows(); ++i) {
    auto r = shard.features.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (!std::isfinite(r[j])) {
        throw Error(ErrorCode::kNonFiniteFeature, fmt::format("row {}, column {}", i, j),
                    {.row = i, .col = j});
      }
    }
  }
}

void write_envelope(ByteWriter& w, const WeakModelEnvelope& env) {
  w.str8(env.family_id);
  w.u32(env.format_version);
  w.blob(env.payload);
}

WeakModelEnvelope read_envelope(ByteReader& r) {
  WeakModelEnvelope env;
  env.family_id = r.str8();
  env.format_version = r.u32();
  env.payload = r.blob();
  return env;
}

Bytes encode_envelope(const WeakModelEnvelope& env) {
  ByteWriter w;
  write_envelope(w, env);
  return std::move(w).take();
}

WeakModelEnvelope decode_envelope(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  auto env = read_envelope(r);
  r.expect_done("envelope");
  return env;
}

WeightVector::WeightVector(std::vector<double> weights) : weights_(std::move(weights)) {
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (!(weights_[i] > 0.0) || !std::isfinite(weights_[i])) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("weight {} = {} is not strictly positive and finite", i,
                              weights_[i]),
                  {.row = i});
    }
  }
  norm_ = wide_sum(weights_);
}

WeightVector WeightVector::uniform(std::size_t n, double value) {
  return WeightVector(std::vector<double>(n, value));
}

Bitmap::Bitmap(std::size_t bits, Bytes packed) : bits_(bits), bytes_(std::move(packed)) {
  if (bytes_.size() != (bits_ + 7) / 8) {
    throw Error(ErrorCode::kMalformedPayload,
                fmt::format("{} packed bytes for a {}-bit bitmap", bytes_.size(), bits_));
  }
}

std::size_t Bitmap::count() const {
  std::size_t c = 0;
  for (auto b : bytes_) c += static_cast<std::size_t>(std::popcount(b));
  return c;
}

std::vector<double> ErrorReport::errors_as_double() const {
  std::vector<double> out;
  out.reserve(errors.size());
  for (auto e : errors) out.push_back(to_double(e));
  return out;
}

void check_report_consistency(const ErrorReport& report, const WeightVector& weights) {
  if (report.errors.size() != report.mispredictions.size()) {
    throw Error(ErrorCode::kLengthMismatch, "errors and misprediction bitmaps differ in length");
  }
  const double norm = to_double(report.weight_norm);
  for (std::size_t j = 0; j < report.errors.size(); ++j) {
    const double e = to_double(report.errors[j]);
    if (e < 0.0 || e > norm) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("error[{}] = {} outside [0, {}]", j, e, norm), {.row = j});
    }
    const auto& bits = report.mispredictions[j];
    if (bits.size() != weights.size()) {
      throw Error(ErrorCode::kLengthMismatch, "bitmap length differs from weight count");
    }
    WideReal sum = 0;
    for (std::size_t k = 0; k < bits.size(); ++k) {
      if (bits.test(k)) sum += weights[k];
    }
    const double s = to_double(sum);
    if (std::abs(s - e) > 1e-9 * std::max(1.0, std::abs(s))) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("error[{}] = {} but bitmap weight sum is {}", j, e, s), {.row = j});
    }
  }
}

std::string_view to_string(FederationMode mode) {
  return mode == FederationMode::kAdaBoostF ? "adaboost_f" : "bagging";
}

FederationMode parse_mode(std::string_view s) {
  if (s == "adaboost_f") return FederationMode::kAdaBoostF;
  if (s == "bagging") return FederationMode::kBagging;
  throw Error(ErrorCode::kBadValue, fmt::format("unknown federation mode '{}'", s));
}

void validate_config(const FederationConfig& config) {
  if (config.num_collaborators < 1) {
    throw Error(ErrorCode::kBadValue, "num_collaborators must be >= 1");
  }
  if (config.rounds < 1) throw Error(ErrorCode::kBadValue, "rounds must be >= 1");
  validate_learner_spec(config.learner);
}

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, CollaboratorId collaborator, std::uint32_t round) {
  return splitmix64(splitmix64(seed ^ splitmix64(collaborator)) + round);
}

}  // namespace fedboost
