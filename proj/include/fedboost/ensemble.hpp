#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fedboost/core.hpp"
#include "fedboost/learners.hpp"

namespace fedboost {

// The global model: an ordered list of (weak hypothesis, alpha) terms.
class StrongHypothesis {
 public:
  struct Term {
    WeakModelEnvelope envelope;
    WeakModelPtr model;
    double alpha = 0.0;
  };

  /// num_classes = 0 means "unknown"; votes then size themselves from the predictions.
  explicit StrongHypothesis(std::uint32_t num_classes = 0) : num_classes_(num_classes) {}

  /// Decodes the envelope once; throws on decode failure or non-finite alpha.
  void append(WeakModelEnvelope envelope, double alpha);
  void append(WeakModelEnvelope envelope, WeakModelPtr model, double alpha);

  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }
  const Term& term(std::size_t i) const { return terms_[i]; }
  std::span<const Term> terms() const { return terms_; }
  std::uint32_t num_classes() const { return num_classes_; }

 private:
  std::uint32_t num_classes_;
  std::vector<Term> terms_;
};

/// argmax_y sum_t alpha_t [h_t(x) = y]; ties go to the smallest class id.
/// Throws EmptyEnsemble or ArityMismatch.
ClassId predict_strong(const StrongHypothesis& h, std::span<const double> x);
std::vector<ClassId> predict_strong(const StrongHypothesis& h, const FeatureMatrix& x);

// Running vote totals of a growing ensemble over a fixed sample set, so each
// term is evaluated once per sample. Agrees exactly with predict_strong.
class VoteTally {
 public:
  VoteTally(const FeatureMatrix& samples, std::uint32_t num_classes);

  void add(const WeakModel& model, double alpha);
  std::size_t terms() const { return terms_; }
  std::vector<ClassId> predictions() const;

 private:
  const FeatureMatrix* samples_;
  std::uint32_t num_classes_;
  std::vector<double> votes_;  // rows x num_classes
  std::size_t terms_ = 0;
};

// Ensemble export: "MAFL" | version u32 | term count u64 | per term (alpha f64, envelope).
inline constexpr std::uint32_t kEnsembleFormatVersion = 1;
Bytes encode_ensemble(const StrongHypothesis& h);
StrongHypothesis decode_ensemble(std::span<const std::uint8_t> bytes, std::uint32_t num_classes = 0);
void save_ensemble(const StrongHypothesis& h, const std::filesystem::path& path);
StrongHypothesis load_ensemble(const std::filesystem::path& path, std::uint32_t num_classes = 0);

}  // namespace fedboost
