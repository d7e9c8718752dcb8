#include "fedboost/protocol/aggregator.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace fedboost::protocol {

namespace {

constexpr std::string_view kTrain = "train";
constexpr std::string_view kValidateWeak = "weak_learners_validate";
constexpr std::string_view kUpdate = "adaboost_update";

std::string origin_of(CollaboratorId id) { return fmt::format("collaborator/{}", id); }

CollaboratorId id_of(const std::string& origin) {
  auto digits = std::string_view(origin).substr(origin.rfind('/') + 1);
  CollaboratorId id = 0;
  std::from_chars(digits.data(), digits.data() + digits.size(), id);
  return id;
}

Error violation(const std::string& what) { return Error(ErrorCode::kProtocolViolation, what); }

}  // namespace

struct Aggregator::Peer {
  ConnectionPtr conn;
  std::mutex send_mu;
  std::thread thread;
  std::optional<CollaboratorId> id;
  bool said_bye = false;
};

struct Aggregator::Impl {
  explicit Impl(RetentionPolicy retention) : store(retention) {}

  std::mutex mu;
  std::condition_variable done_cv;
  std::vector<std::unique_ptr<Peer>> peers;
  std::optional<Error> failure;

  std::map<CollaboratorId, Hello> hellos;
  bool started = false;
  bool finished = false;
  std::uint32_t num_classes = 0;
  std::uint32_t round = 1;
  std::size_t task_index = 0;
  std::vector<std::optional<std::size_t>> assigned;  // last step handed to each collaborator
  std::set<CollaboratorId> synched;
  std::set<CollaboratorId> uploaded;
  std::size_t byes = 0;

  std::vector<WeakModelEnvelope> hypotheses;  // this round, by collaborator id
  std::optional<RoundDecision> decision;
  StrongHypothesis ensemble;
  std::optional<VoteTally> tally;
  std::vector<RoundDecision> decisions;
  std::vector<MetricRecord> metrics;
  Store store;
  std::uint64_t puts_at_round_start = 0;
  std::vector<StoreTracePoint> trace;
};

Aggregator::Aggregator(AggregatorConfig config)
    : config_(std::move(config)), impl_(std::make_unique<Impl>(config_.retention)) {
  validate_config(config_.federation);
  if (config_.tasks.empty()) throw Error(ErrorCode::kBadTaskOrder, "empty task list");
  impl_->assigned.resize(config_.federation.num_collaborators);
}

Aggregator::~Aggregator() {
  bool running = false;
  {
    std::lock_guard lock(impl_->mu);
    running = !impl_->failure && impl_->byes < config_.federation.num_collaborators;
  }
  if (running) fail(Error(ErrorCode::kCollaboratorDropped, "aggregator shut down"));
  for (auto& p : impl_->peers) {
    if (p->thread.joinable()) p->thread.join();
  }
}

void Aggregator::attach(ConnectionPtr conn) {
  std::lock_guard lock(impl_->mu);
  auto peer = std::make_unique<Peer>();
  peer->conn = std::move(conn);
  auto* raw = peer.get();
  impl_->peers.push_back(std::move(peer));
  raw->thread = std::thread([this, raw] { serve(*raw); });
}

void Aggregator::abort(const Error& why) { fail(why); }

void Aggregator::fail(const Error& why) {
  std::vector<Peer*> peers;
  {
    std::lock_guard lock(impl_->mu);
    if (impl_->failure) return;
    impl_->failure = why;
    for (auto& p : impl_->peers) peers.push_back(p.get());
    impl_->done_cv.notify_all();
  }
  spdlog::error("federation failed: {}", why.what());
  for (auto* p : peers) {
    try {
      std::lock_guard lock(p->send_mu);
      send_frame(*p->conn, Abort{why.what()}, config_.wire);
    } catch (const Error&) {
    }
    p->conn->close();
  }
}

void Aggregator::serve(Peer& peer) {
  try {
    while (!peer.said_bye) {
      auto msg = recv_frame(*peer.conn, config_.wire);
      std::vector<Message> replies;
      {
        std::lock_guard lock(impl_->mu);
        if (impl_->failure) return;
        replies = handle(peer, msg);
      }
      std::lock_guard lock(peer.send_mu);
      for (const auto& r : replies) send_frame(*peer.conn, r, config_.wire);
    }
  } catch (const Error& e) {
    std::optional<Error> why;
    {
      std::lock_guard lock(impl_->mu);
      if (impl_->failure) return;
      if (e.code() == ErrorCode::kConnectionClosed || e.code() == ErrorCode::kFrameTooLarge ||
          e.code() == ErrorCode::kMalformedFrame) {
        const auto id = peer.id.value_or(0);
        why = Error(ErrorCode::kCollaboratorDropped,
                    fmt::format("collaborator {} dropped in round {}: {}",
                                peer.id ? fmt::format("{}", id) : "?", impl_->round, e.what()),
                    {.row = id, .col = impl_->round});
      } else {
        why = e;
      }
    }
    fail(*why);
  }
}

std::vector<Message> Aggregator::handle(Peer& peer, const Message& msg) {
  auto& s = *impl_;
  const auto n = config_.federation.num_collaborators;
  const auto rounds = config_.federation.rounds;
  const auto& tasks = config_.tasks;
  const bool adaboost = config_.federation.mode == FederationMode::kAdaBoostF;
  const std::size_t step = (s.round - 1) * tasks.size() + s.task_index;
  const std::string& task = s.finished ? tasks.back() : tasks[s.task_index];

  if (!peer.id && !std::holds_alternative<Hello>(msg)) {
    throw violation(fmt::format("{} before HELLO", to_string(kind_of(msg))));
  }

  auto check_upload = [&](std::uint32_t msg_round, std::string_view what) {
    if (s.finished || msg_round != s.round || s.assigned[*peer.id] != step) {
      throw violation(fmt::format("collaborator {} sent {} for round {} outside its task",
                                  *peer.id, what, msg_round));
    }
  };

  if (auto* m = std::get_if<Hello>(&msg)) {
    if (peer.id) throw Error(ErrorCode::kDuplicateHello, "second HELLO on one connection");
    if (m->collab_id >= n) {
      throw violation(fmt::format("collaborator id {} outside [0, {})", m->collab_id, n));
    }
    if (s.hellos.contains(m->collab_id)) {
      throw Error(ErrorCode::kDuplicateHello,
                  fmt::format("collaborator {} said HELLO twice", m->collab_id),
                  {.row = m->collab_id});
    }
    if (m->shard_size == 0) throw violation(fmt::format("collaborator {} has no data", m->collab_id));
    peer.id = m->collab_id;
    s.hellos[m->collab_id] = *m;
    log_.record(EventKind::kHello, m->collab_id, "", 0);
    if (s.hellos.size() == n) {
      std::uint32_t k = config_.num_classes;
      if (k == 0) {
        for (const auto& [id, h] : s.hellos) k = std::max<std::uint32_t>(k, h.num_classes);
        if (config_.test_set) k = std::max(k, config_.test_set->num_classes);
      }
      for (const auto& [id, h] : s.hellos) {
        if (h.num_classes > k) {
          throw violation(fmt::format("collaborator {} has {} classes, federation has {}", id,
                                      h.num_classes, k));
        }
      }
      if (k < 2) throw Error(ErrorCode::kInvalidArgument, "federation needs at least 2 classes");
      s.num_classes = k;
      s.ensemble = StrongHypothesis(k);
      if (config_.test_set) s.tally.emplace(config_.test_set->features, k);
      s.started = true;
      spdlog::info("all {} collaborators connected; {} classes", n, k);
    }
    return {Ack{}};
  }

  if (auto* m = std::get_if<TaskPoll>(&msg)) {
    if (s.finished) return {Bye{*peer.id}};
    if (!s.started || s.assigned[*peer.id] == step) {
      log_.record(EventKind::kWait, *peer.id, "", s.round);
      return {Wait{}};
    }
    std::vector<Message> out;
    if (!s.assigned[*peer.id]) {
      out.push_back(SpecBroadcast{0, s.num_classes, rounds, config_.federation.seed,
                                  config_.federation.mode, config_.federation.learner});
    }
    if (task == kValidateWeak) {
      out.push_back(HypothesisBroadcast{s.round, s.hypotheses});
      log_.record(EventKind::kHypothesisBroadcast, *peer.id, task, s.round);
    } else if (task == kUpdate) {
      if (!s.decision) throw violation("adaboost_update before a decision");
      out.push_back(DecisionBroadcast{s.round, *s.decision});
      log_.record(EventKind::kDecisionBroadcast, *peer.id, task, s.round);
    }
    s.assigned[*peer.id] = step;
    log_.record(EventKind::kTaskAssign, *peer.id, task, s.round);
    out.push_back(TaskAssign{task, s.round});
    (void)m;
    return out;
  }

  if (auto* m = std::get_if<ModelUpload>(&msg)) {
    check_upload(m->round, "MODEL_UPLOAD");
    if (task != kTrain || s.uploaded.contains(*peer.id)) {
      throw violation(fmt::format("unexpected MODEL_UPLOAD from {}", *peer.id));
    }
    decode_model(m->envelope);  // reject garbage at the door
    s.store.put({origin_of(*peer.id), s.round, std::string(kTrain), "model", {"model"}},
                encode_envelope(m->envelope));
    s.uploaded.insert(*peer.id);
    log_.record(EventKind::kModelUpload, *peer.id, task, s.round);
    return {Ack{}};
  }

  if (auto* m = std::get_if<ErrorUpload>(&msg)) {
    check_upload(m->round, "ERROR_UPLOAD");
    if (task != kValidateWeak || s.uploaded.contains(*peer.id)) {
      throw violation(fmt::format("unexpected ERROR_UPLOAD from {}", *peer.id));
    }
    if (m->report.round != s.round || m->report.errors.size() != s.hypotheses.size() ||
        m->report.mispredictions.size() != s.hypotheses.size()) {
      throw violation(fmt::format("collaborator {} sent a malformed error report", *peer.id));
    }
    s.store.put({origin_of(*peer.id), s.round, std::string(kValidateWeak), "errors", {"report"}},
                encode_message(*m, EnvelopeCodec::kCompact));
    s.uploaded.insert(*peer.id);
    log_.record(EventKind::kErrorUpload, *peer.id, task, s.round);
    return {Ack{}};
  }

  if (auto* m = std::get_if<MetricUpload>(&msg)) {
    check_upload(m->round, "METRIC_UPLOAD");
    if (upload_for_task(task) != EventKind::kMetricUpload) {
      throw violation(fmt::format("METRIC_UPLOAD during {}", task));
    }
    if (!std::isfinite(m->value)) throw violation(fmt::format("non-finite metric {}", m->name));
    ByteWriter w;
    w.f64(m->value);
    s.store.put({origin_of(*peer.id), s.round, task, m->name, {"metric"}}, std::move(w).take());
    s.metrics.push_back({s.round, *peer.id, m->name, m->value});
    s.uploaded.insert(*peer.id);
    log_.record(EventKind::kMetricUpload, *peer.id, task, s.round);
    return {Ack{}};
  }

  if (auto* m = std::get_if<Synch>(&msg)) {
    if (m->collab_id != *peer.id) throw violation("SYNCH with a foreign collaborator id");
    auto it = std::find(tasks.begin(), tasks.end(), m->task);
    if (it == tasks.end() || m->round == 0) throw violation(fmt::format("SYNCH for '{}'", m->task));
    const std::size_t target =
        (m->round - 1) * tasks.size() + static_cast<std::size_t>(it - tasks.begin());
    if (target < step || s.finished) {
      log_.record(EventKind::kProceed, *peer.id, m->task, m->round);
      return {Proceed{}};
    }
    if (target > step || s.assigned[*peer.id] != step) {
      throw violation(fmt::format("collaborator {} synched on {}/{} ahead of the federation",
                                  *peer.id, m->task, m->round));
    }
    if (upload_for_task(task) && !s.uploaded.contains(*peer.id)) {
      throw violation(fmt::format("collaborator {} synched on {} without uploading", *peer.id, task));
    }
    s.synched.insert(*peer.id);
    log_.record(EventKind::kSynch, *peer.id, task, s.round);
    if (s.synched.size() < n) {
      log_.record(EventKind::kHold, *peer.id, task, s.round);
      return {Hold{}};
    }

    // Barrier complete: run the aggregator's part of the task, then advance.
    log_.record(EventKind::kBarrierComplete, std::nullopt, task, s.round);
    if (task == kTrain) {
      s.hypotheses.clear();
      auto entries = s.store.query({.round = s.round, .task = std::string(kTrain), .name = "model"});
      std::sort(entries.begin(), entries.end(), [](const StoreEntry& a, const StoreEntry& b) {
        return id_of(a.key.origin) < id_of(b.key.origin);
      });
      for (const auto& e : entries) {
        auto env = decode_envelope(e.value);
        env.origin_id = id_of(e.key.origin);
        env.round = s.round;
        s.hypotheses.push_back(std::move(env));
      }
    } else if (task == kValidateWeak) {
      auto entries =
          s.store.query({.round = s.round, .task = std::string(kValidateWeak), .name = "errors"});
      std::sort(entries.begin(), entries.end(), [](const StoreEntry& a, const StoreEntry& b) {
        return id_of(a.key.origin) < id_of(b.key.origin);
      });
      std::vector<ErrorReport> reports;
      for (const auto& e : entries) {
        reports.push_back(std::get<ErrorUpload>(decode_message(e.value, EnvelopeCodec::kCompact)).report);
      }
      const std::size_t before = s.ensemble.size();
      if (adaboost) {
        auto d = decide_round(reports, n, s.num_classes);
        s.decision = d;
        s.decisions.push_back(d);
        log_.record(EventKind::kDecision, std::nullopt, task, s.round);
        s.ensemble.append(s.hypotheses[d.best_index], d.alpha);
        s.metrics.push_back({s.round, std::nullopt, "error", d.global_error});
        s.metrics.push_back({s.round, std::nullopt, "norm", to_double(d.global_norm)});
        ByteWriter w;
        w.u32(d.best_index);
        w.f64(d.alpha);
        s.store.put({"aggregator", s.round, std::string(kValidateWeak), "decision", {"decision"}},
                    std::move(w).take());
      } else {
        bagging_aggregate(s.ensemble, s.hypotheses);
      }
      if (s.tally) {
        for (std::size_t i = before; i < s.ensemble.size(); ++i) {
          s.tally->add(*s.ensemble.term(i).model, s.ensemble.term(i).alpha);
        }
      }
    }

    if (s.task_index + 1 == tasks.size()) {
      if (s.tally) {
        const auto& test = *config_.test_set;
        s.metrics.push_back({s.round, std::nullopt, "f1_macro",
                             f1_macro(s.tally->predictions(), test.labels, s.num_classes)});
      } else {
        // No held-out data here: pool the collaborators' local scores by shard size.
        double num = 0, den = 0;
        for (const auto& r : s.metrics) {
          if (r.round == s.round && r.collaborator && r.name == "f1_macro") {
            const double w = static_cast<double>(s.hellos[*r.collaborator].shard_size);
            num += w * r.value;
            den += w;
          }
        }
        if (den > 0) s.metrics.push_back({s.round, std::nullopt, "f1_macro", num / den});
      }
      s.store.clean_up(s.round);
      s.trace.push_back({s.round, static_cast<std::size_t>(s.store.total_puts() - s.puts_at_round_start),
                         s.store.size()});
      s.puts_at_round_start = s.store.total_puts();
      s.task_index = 0;
      s.decision.reset();
      if (s.round == rounds) {
        s.finished = true;
      } else {
        ++s.round;
      }
    } else {
      ++s.task_index;
    }
    s.synched.clear();
    s.uploaded.clear();
    log_.record(EventKind::kProceed, *peer.id, m->task, m->round);
    return {Proceed{}};
  }

  if (std::holds_alternative<Bye>(msg)) {
    if (!s.finished) {
      throw Error(ErrorCode::kCollaboratorDropped,
                  fmt::format("collaborator {} left in round {}", *peer.id, s.round),
                  {.row = *peer.id, .col = s.round});
    }
    peer.said_bye = true;
    ++s.byes;
    log_.record(EventKind::kBye, *peer.id, "", s.round);
    if (s.byes == n) s.done_cv.notify_all();
    return {Ack{}};
  }

  throw violation(fmt::format("unexpected {} from collaborator {}", to_string(kind_of(msg)),
                              *peer.id));
}

FederationResult Aggregator::wait() {
  const auto n = config_.federation.num_collaborators;
  {
    std::unique_lock lock(impl_->mu);
    impl_->done_cv.wait(lock, [&] { return impl_->failure || impl_->byes == n; });
  }
  std::vector<Peer*> peers;
  {
    std::lock_guard lock(impl_->mu);
    for (auto& p : impl_->peers) peers.push_back(p.get());
  }
  for (auto* p : peers) {
    if (p->thread.joinable()) p->thread.join();
  }
  std::lock_guard lock(impl_->mu);
  if (impl_->failure) throw *impl_->failure;
  FederationResult r;
  r.ensemble = impl_->ensemble;
  r.decisions = impl_->decisions;
  r.metrics = impl_->metrics;
  r.store_trace = impl_->trace;
  r.events = log_.events();
  r.num_classes = impl_->num_classes;
  for (const auto& [id, h] : impl_->hellos) r.total_samples += h.shard_size;
  return r;
}

FederationResult aggregator_serve(const AggregatorConfig& config, TcpListener& listener,
                                  std::chrono::milliseconds accept_timeout) {
  Aggregator agg(config);
  for (std::uint32_t i = 0; i < config.federation.num_collaborators; ++i) {
    try {
      agg.attach(listener.accept(accept_timeout));
    } catch (const Error& e) {
      agg.abort(Error(ErrorCode::kCollaboratorDropped,
                      fmt::format("only {} of {} collaborators connected: {}", i,
                                  config.federation.num_collaborators, e.what())));
      break;
    }
  }
  return agg.wait();
}

}  // namespace fedboost::protocol
