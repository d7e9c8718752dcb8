#include "fedboost/protocol/collaborator.hpp"

#include <thread>

#include <fmt/format.h>

#include "fedboost/metrics.hpp"

namespace fedboost::protocol {

namespace {

class Session {
 public:
  Session(Connection& conn, DatasetShard shard, const CollaboratorConfig& config)
      : conn_(conn), shard_(std::move(shard)), config_(config), store_(config.retention) {}

  CollaboratorResult run() {
    const auto id = config_.id;
    send(Hello{id, shard_.size(), static_cast<std::uint16_t>(shard_.num_classes)});
    expect<Ack>("HELLO");

    for (;;) {
      send(TaskPoll{id, round_});
      auto reply = next_assignment();
      if (std::holds_alternative<Wait>(reply)) {
        ++result_.waits;
        std::this_thread::sleep_for(config_.wait_interval);
        continue;
      }
      if (std::holds_alternative<Bye>(reply)) {
        send(Bye{id});
        expect<Ack>("BYE");
        break;
      }
      const auto& assign = std::get<TaskAssign>(reply);
      if (!tally_) throw violation("task assigned before the learner spec");
      if (assign.round < round_) throw violation("task for an earlier round");
      if (assign.round > round_) store_.clean_up(assign.round);
      round_ = assign.round;
      if (config_.before_task) config_.before_task(assign.task, round_);
      run_task(assign.task);
      barrier(assign.task);
      result_.rounds_completed = round_;
    }
    result_.ensemble = std::move(ensemble_);
    result_.state = std::move(state_);
    result_.store_size = store_.size();
    return std::move(result_);
  }

 private:
  static Error violation(const std::string& what) {
    return Error(ErrorCode::kProtocolViolation, what);
  }

  void send(const Message& m) { send_frame(conn_, m, config_.wire); }

  Message receive() {
    auto m = recv_frame(conn_, config_.wire);
    if (auto* a = std::get_if<Abort>(&m)) {
      throw Error(ErrorCode::kAggregatorGone, fmt::format("aggregator aborted: {}", a->reason));
    }
    return m;
  }

  template <typename T>
  T expect(std::string_view after) {
    auto m = receive();
    if (auto* v = std::get_if<T>(&m)) return *v;
    throw violation(fmt::format("unexpected {} in reply to {}", to_string(kind_of(m)), after));
  }

  // Absorbs broadcasts that precede the actual reply to TASK_POLL.
  Message next_assignment() {
    for (;;) {
      auto m = receive();
      if (auto* spec = std::get_if<SpecBroadcast>(&m)) {
        on_spec(*spec);
      } else if (auto* hyps = std::get_if<HypothesisBroadcast>(&m)) {
        on_hypotheses(*hyps);
      } else if (auto* d = std::get_if<DecisionBroadcast>(&m)) {
        decision_ = d->decision;
      } else if (std::holds_alternative<TaskAssign>(m) || std::holds_alternative<Wait>(m) ||
                 std::holds_alternative<Bye>(m)) {
        return m;
      } else {
        throw violation(fmt::format("unexpected {} in reply to TASK_POLL", to_string(kind_of(m))));
      }
    }
  }

  void on_spec(const SpecBroadcast& m) {
    if (m.num_classes < shard_.num_classes) {
      throw violation(fmt::format("federation has {} classes, local data {}", m.num_classes,
                                  shard_.num_classes));
    }
    spec_ = m.spec;
    validate_learner_spec(spec_);
    seed_ = m.seed;
    mode_ = m.mode;
    shard_.num_classes = m.num_classes;
    state_ = CollaboratorBoostState::initial(shard_.size(), config_.initial_weight);
    ensemble_ = StrongHypothesis(m.num_classes);
    tally_.emplace(shard_.features, m.num_classes);
  }

  void on_hypotheses(const HypothesisBroadcast& m) {
    hypotheses_ = m.hypotheses;
    models_.clear();
    for (std::size_t j = 0; j < hypotheses_.size(); ++j) {
      try {
        models_.push_back(decode_model(hypotheses_[j]));
      } catch (const Error& e) {
        throw Error(ErrorCode::kDecodeFailure, fmt::format("hypothesis {}: {}", j, e.what()),
                    {.row = j});
      }
    }
  }

  void put(std::string_view task, std::string name, Bytes value) {
    store_.put({"self", round_, std::string(task), std::move(name), {}}, std::move(value));
  }

  void upload_metric(std::string_view task, std::string name, double value) {
    ByteWriter w;
    w.f64(value);
    put(task, name, std::move(w).take());
    send(MetricUpload{round_, std::move(name), value});
    expect<Ack>("METRIC_UPLOAD");
  }

  double ensemble_f1() const {
    if (tally_->terms() == 0) return 0.0;
    return f1_macro(tally_->predictions(), shard_.labels, shard_.num_classes);
  }

  void append_term(const WeakModelEnvelope& env, const WeakModelPtr& model, double alpha) {
    ensemble_.append(env, model, alpha);
    tally_->add(*model, alpha);
  }

  void run_task(const std::string& task) {
    if (task == "train") {
      local_model_ = fit_model(spec_, shard_, state_.weights, derive_seed(seed_, config_.id, round_));
      auto env = to_envelope(*local_model_, config_.id, round_);
      put(task, "model", encode_envelope(env));
      send(ModelUpload{round_, std::move(env)});
      expect<Ack>("MODEL_UPLOAD");
    } else if (task == "weak_learners_validate") {
      if (hypotheses_.empty() || hypotheses_.front().round != round_) {
        throw violation("weak_learners_validate without this round's hypotheses");
      }
      // Bagging never advances the boosting state, so keep it in step with the protocol.
      if (mode_ == FederationMode::kBagging) state_.round = round_;
      report_ = evaluate_hypotheses(std::span<const WeakModelPtr>(models_), shard_, state_);
      ErrorUpload up{round_, report_};
      put(task, "errors", encode_message(up, EnvelopeCodec::kCompact));
      send(up);
      expect<Ack>("ERROR_UPLOAD");
    } else if (task == "adaboost_update") {
      if (!decision_ || decision_->round != round_) throw violation("update without a decision");
      const auto c = decision_->best_index;
      if (c >= models_.size()) throw violation(fmt::format("decision picks hypothesis {}", c));
      state_ = update_weights(state_, *decision_, report_.mispredictions[c]);
      append_term(hypotheses_[c], models_[c], decision_->alpha);
    } else if (task == "adaboost_validate") {
      if (mode_ == FederationMode::kBagging) {
        for (std::size_t j = 0; j < models_.size(); ++j) append_term(hypotheses_[j], models_[j], 1.0);
      }
      upload_metric(task, "f1_macro", ensemble_f1());
    } else if (task == "aggregated_model_validation") {
      upload_metric(task, "aggregated_f1", ensemble_f1());
    } else if (task == "locally_tuned_model_validation") {
      double f1 = 0.0;
      if (local_model_) {
        std::vector<ClassId> pred(shard_.size());
        for (std::size_t k = 0; k < shard_.size(); ++k) {
          pred[k] = local_model_->predict(shard_.features.row(k));
        }
        f1 = f1_macro(pred, shard_.labels, shard_.num_classes);
      }
      upload_metric(task, "local_f1", f1);
    } else {
      throw violation(fmt::format("unknown task '{}'", task));
    }
  }

  void barrier(const std::string& task) {
    for (;;) {
      send(Synch{config_.id, task, round_});
      auto m = receive();
      if (std::holds_alternative<Proceed>(m)) return;
      if (!std::holds_alternative<Hold>(m)) {
        throw violation(fmt::format("unexpected {} in reply to SYNCH", to_string(kind_of(m))));
      }
      ++result_.holds;
      std::this_thread::sleep_for(config_.poll_interval);
    }
  }

  Connection& conn_;
  DatasetShard shard_;
  const CollaboratorConfig& config_;
  Store store_;

  LearnerSpec spec_;
  std::uint64_t seed_ = 0;
  FederationMode mode_ = FederationMode::kAdaBoostF;
  std::uint32_t round_ = 0;
  CollaboratorBoostState state_;
  StrongHypothesis ensemble_;
  std::optional<VoteTally> tally_;
  WeakModelPtr local_model_;
  std::vector<WeakModelEnvelope> hypotheses_;
  std::vector<WeakModelPtr> models_;
  ErrorReport report_;
  std::optional<RoundDecision> decision_;
  CollaboratorResult result_;
};

}  // namespace

CollaboratorResult run_collaborator(Connection& conn, DatasetShard shard,
                                    const CollaboratorConfig& config) {
  validate_shard(shard);
  Session session(conn, std::move(shard), config);
  try {
    return session.run();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConnectionClosed || e.code() == ErrorCode::kMalformedFrame ||
        e.code() == ErrorCode::kFrameTooLarge) {
      throw Error(ErrorCode::kAggregatorGone,
                  fmt::format("collaborator {}: lost the aggregator: {}", config.id, e.what()));
    }
    throw;
  }
}

}  // namespace fedboost::protocol
