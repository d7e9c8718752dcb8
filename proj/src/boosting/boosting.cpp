#include "fedboost/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace fedboost {

CollaboratorBoostState CollaboratorBoostState::initial(std::size_t num_samples,
                                                       double initial_weight) {
  CollaboratorBoostState s;
  s.weights = WeightVector::uniform(num_samples, initial_weight);
  return s;
}

double samme_alpha(double global_error, std::uint32_t num_classes) {
  if (num_classes < 2) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("num_classes {} < 2", num_classes));
  }
  const double eps = std::clamp(global_error, kMinEpsilon, kMaxEpsilon);
  return std::log((1.0 - eps) / eps) + std::log(static_cast<double>(num_classes - 1));
}

ErrorReport evaluate_hypotheses(std::span<const WeakModelPtr> hypotheses, const DatasetShard& shard,
                                const CollaboratorBoostState& state) {
  if (state.weights.size() != shard.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                fmt::format("{} weights for {} samples", state.weights.size(), shard.size()));
  }
  ErrorReport report;
  report.round = state.round;
  report.weight_norm = state.weights.exact_norm();
  report.errors.reserve(hypotheses.size());
  report.mispredictions.reserve(hypotheses.size());
  for (const auto& h : hypotheses) {
    Bitmap missed(shard.size());
    WideReal err = 0;
    for (std::size_t k = 0; k < shard.size(); ++k) {
      if (h->predict(shard.features.row(k)) != shard.labels[k]) {
        missed.set(k);
        err += state.weights[k];
      }
    }
    report.errors.push_back(err);
    report.mispredictions.push_back(std::move(missed));
  }
  return report;
}

ErrorReport evaluate_hypotheses(std::span<const WeakModelEnvelope> hypotheses,
                                const DatasetShard& shard, const CollaboratorBoostState& state) {
  std::vector<WeakModelPtr> models;
  models.reserve(hypotheses.size());
  for (std::size_t j = 0; j < hypotheses.size(); ++j) {
    try {
      models.push_back(decode_model(hypotheses[j]));
    } catch (const Error& e) {
      throw Error(ErrorCode::kDecodeFailure, fmt::format("hypothesis {}: {}", j, e.what()),
                  {.row = j});
    }
  }
  return evaluate_hypotheses(models, shard, state);
}

namespace {

void check_reports(std::span<const ErrorReport> reports, std::uint32_t n) {
  if (reports.size() != n || n == 0) {
    throw Error(ErrorCode::kReportCountMismatch,
                fmt::format("expected {} error reports, got {}", n, reports.size()));
  }
  const auto len = reports.front().errors.size();
  if (len == 0) throw Error(ErrorCode::kLengthMismatch, "error reports are empty");
  for (const auto& r : reports) {
    if (r.errors.size() != len) {
      throw Error(ErrorCode::kLengthMismatch,
                  fmt::format("error vectors of length {} and {}", len, r.errors.size()));
    }
    if (r.round != reports.front().round) {
      throw Error(ErrorCode::kStaleRound,
                  fmt::format("reports from rounds {} and {}", reports.front().round, r.round));
    }
  }
}

std::vector<WideReal> pooled_errors(std::span<const ErrorReport> reports, WideReal& norm) {
  std::vector<WideReal> pooled(reports.front().errors.size(), 0);
  norm = 0;
  for (const auto& r : reports) {
    for (std::size_t j = 0; j < pooled.size(); ++j) pooled[j] += r.errors[j];
    norm += r.weight_norm;
  }
  for (auto& e : pooled) e /= norm;
  return pooled;
}

}  // namespace

std::vector<double> global_errors(std::span<const ErrorReport> reports) {
  check_reports(reports, static_cast<std::uint32_t>(reports.size()));
  WideReal norm;
  auto pooled = pooled_errors(reports, norm);
  std::vector<double> out;
  for (auto e : pooled) out.push_back(to_double(e));
  return out;
}

RoundDecision decide_round(std::span<const ErrorReport> reports, std::uint32_t num_collaborators,
                           std::uint32_t num_classes) {
  check_reports(reports, num_collaborators);
  WideReal norm;
  auto pooled = pooled_errors(reports, norm);
  std::size_t best = 0;
  for (std::size_t j = 1; j < pooled.size(); ++j) {
    if (pooled[j] < pooled[best]) best = j;
  }
  RoundDecision d;
  d.round = reports.front().round;
  d.best_index = static_cast<std::uint32_t>(best);
  d.global_error = to_double(pooled[best]);
  d.alpha = samme_alpha(d.global_error, num_classes);
  d.global_norm = norm;
  return d;
}

CollaboratorBoostState update_weights(const CollaboratorBoostState& state,
                                      const RoundDecision& decision, const Bitmap& mispredicted) {
  if (decision.round != state.round) {
    throw Error(ErrorCode::kStaleRound, fmt::format("decision for round {} applied in round {}",
                                                    decision.round, state.round));
  }
  if (mispredicted.size() != state.weights.size()) {
    throw Error(ErrorCode::kLengthMismatch, "misprediction bitmap length differs from weights");
  }
  if (!(decision.global_norm > 0)) {
    throw Error(ErrorCode::kInvalidArgument, "global norm must be positive");
  }
  const double boost = std::exp(decision.alpha);
  std::vector<double> next(state.weights.size());
  for (std::size_t k = 0; k < next.size(); ++k) {
    double w = to_double(static_cast<WideReal>(state.weights[k]) / decision.global_norm);
    if (mispredicted.test(k)) w *= boost;
    // Underflow would break strict positivity; keep the smallest representable weight.
    next[k] = std::max(w, std::numeric_limits<double>::denorm_min());
  }
  CollaboratorBoostState out;
  out.weights = WeightVector(std::move(next));
  out.round = state.round + 1;
  out.last_global_norm = decision.global_norm;
  return out;
}

SequentialRun sequential_adaboost(const LearnerSpec& spec, const DatasetShard& data,
                                  std::uint32_t rounds, std::uint64_t seed, double initial_weight) {
  validate_shard(data);
  SequentialRun run{StrongHypothesis(data.num_classes), {},
                    CollaboratorBoostState::initial(data.size(), initial_weight)};
  auto& state = run.final_state;
  for (std::uint32_t t = 1; t <= rounds; ++t) {
    auto model = fit_model(spec, data, state.weights, derive_seed(seed, 0, t));
    const WeakModelPtr hyps[] = {model};
    auto report = evaluate_hypotheses(hyps, data, state);
    const ErrorReport reports[] = {report};
    auto decision = decide_round(reports, 1, data.num_classes);
    run.ensemble.append(to_envelope(*model, 0, t), model, decision.alpha);
    run.decisions.push_back(decision);
    state = update_weights(state, decision, report.mispredictions[decision.best_index]);
  }
  return run;
}

void bagging_aggregate(StrongHypothesis& ensemble,
                       std::span<const WeakModelEnvelope> round_hypotheses) {
  for (std::size_t j = 0; j < round_hypotheses.size(); ++j) {
    WeakModelPtr model;
    try {
      model = decode_model(round_hypotheses[j]);
    } catch (const Error& e) {
      throw Error(ErrorCode::kDecodeFailure, fmt::format("hypothesis {}: {}", j, e.what()),
                  {.row = j});
    }
    ensemble.append(round_hypotheses[j], std::move(model), 1.0);
  }
}

StrongHypothesis bagging_aggregate(std::span<const std::vector<WeakModelEnvelope>> rounds,
                                   std::uint32_t num_classes) {
  StrongHypothesis h(num_classes);
  for (const auto& hyps : rounds) bagging_aggregate(h, hyps);
  return h;
}

}  // namespace fedboost
