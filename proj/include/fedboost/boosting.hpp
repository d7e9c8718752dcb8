#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fedboost/core.hpp"
#include "fedboost/ensemble.hpp"
#include "fedboost/learners.hpp"

namespace fedboost {

// Private boosting state of one collaborator.
struct CollaboratorBoostState {
  WeightVector weights;
  std::uint32_t round = 1;  // the round being worked on
  WideReal last_global_norm = 0;

  /// Every weight set to `initial_weight` (1 by default, unnormalized).
  static CollaboratorBoostState initial(std::size_t num_samples, double initial_weight = 1.0);
};

/// Bounds applied to the global error before computing alpha.
inline constexpr double kMinEpsilon = 1e-10;
inline constexpr double kMaxEpsilon = 1.0 - 1e-10;

/// ln((1 - eps) / eps) + ln(K - 1) with eps clamped to [kMinEpsilon, kMaxEpsilon].
double samme_alpha(double global_error, std::uint32_t num_classes);

/// errors[j] = sum_k w_k [h_j(x_k) != y_k]; also the misprediction bitmaps and
/// the weight norm. Throws ArityMismatch.
ErrorReport evaluate_hypotheses(std::span<const WeakModelPtr> hypotheses, const DatasetShard& shard,
                                const CollaboratorBoostState& state);
/// As above, decoding each envelope first; throws DecodeFailure(j) on a bad one.
ErrorReport evaluate_hypotheses(std::span<const WeakModelEnvelope> hypotheses,
                                const DatasetShard& shard, const CollaboratorBoostState& state);

/// Aggregator step: pool the reports, pick the hypothesis with the smallest
/// global weighted error (ties to the smallest index) and compute its alpha.
/// `reports` must be ordered by collaborator id. Throws ReportCountMismatch,
/// LengthMismatch or StaleRound (reports from different rounds).
RoundDecision decide_round(std::span<const ErrorReport> reports, std::uint32_t num_collaborators,
                           std::uint32_t num_classes);

/// Global error of every hypothesis, sum_i errors_i[j] / sum_i norm_i.
std::vector<double> global_errors(std::span<const ErrorReport> reports);

/// w_k <- (w_k / global_norm) * exp(alpha [k mispredicted]); advances the round.
/// Throws StaleRound if decision.round != state.round.
CollaboratorBoostState update_weights(const CollaboratorBoostState& state,
                                      const RoundDecision& decision, const Bitmap& mispredicted);

struct SequentialRun {
  StrongHypothesis ensemble;
  std::vector<RoundDecision> decisions;
  CollaboratorBoostState final_state;
};

/// Single-node AdaBoost running the same fit/evaluate/decide/update cycle as
/// one collaborator (id 0) of a federation seeded with `seed`.
SequentialRun sequential_adaboost(const LearnerSpec& spec, const DatasetShard& data,
                                  std::uint32_t rounds, std::uint64_t seed,
                                  double initial_weight = 1.0);

/// Federated bagging: append every hypothesis of the round with alpha = 1.
void bagging_aggregate(StrongHypothesis& ensemble, std::span<const WeakModelEnvelope> round_hypotheses);
StrongHypothesis bagging_aggregate(std::span<const std::vector<WeakModelEnvelope>> rounds,
                                   std::uint32_t num_classes);

}  // namespace fedboost
