#include "fedboost/protocol/event_log.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace fedboost::protocol {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kHello: return "HELLO";
    case EventKind::kTaskAssign: return "TASK_ASSIGN";
    case EventKind::kWait: return "WAIT";
    case EventKind::kModelUpload: return "MODEL_UPLOAD";
    case EventKind::kHypothesisBroadcast: return "HYPOTHESIS_BROADCAST";
    case EventKind::kErrorUpload: return "ERROR_UPLOAD";
    case EventKind::kDecision: return "DECISION";
    case EventKind::kDecisionBroadcast: return "DECISION_BROADCAST";
    case EventKind::kMetricUpload: return "METRIC_UPLOAD";
    case EventKind::kSynch: return "SYNCH";
    case EventKind::kHold: return "HOLD";
    case EventKind::kProceed: return "PROCEED";
    case EventKind::kBarrierComplete: return "BARRIER_COMPLETE";
    case EventKind::kBye: return "BYE";
  }
  return "UNKNOWN";
}

EventLog::EventLog() : start_(std::chrono::steady_clock::now()) {}

void EventLog::record(EventKind kind, std::optional<CollaboratorId> collaborator,
                      std::string_view task, std::uint32_t round) {
  std::lock_guard lock(mu_);
  Event e;
  e.seq = events_.size();
  e.t = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  e.kind = kind;
  e.collaborator = collaborator;
  e.task = std::string(task);
  e.round = round;
  events_.push_back(std::move(e));
}

std::vector<Event> EventLog::events() const {
  std::lock_guard lock(mu_);
  return events_;
}

std::size_t EventLog::count(EventKind kind) const {
  std::lock_guard lock(mu_);
  return static_cast<std::size_t>(std::count_if(
      events_.begin(), events_.end(), [&](const Event& e) { return e.kind == kind; }));
}

std::string EventLog::to_jsonl() const { return protocol::to_jsonl(events()); }

std::string to_jsonl(const std::vector<Event>& events) {
  std::string out;
  for (const auto& e : events) {
    nlohmann::json j = {{"seq", e.seq}, {"t", e.t}, {"event", to_string(e.kind)},
                        {"round", e.round}};
    j["collaborator"] = e.collaborator ? nlohmann::json(*e.collaborator) : nlohmann::json();
    if (!e.task.empty()) j["task"] = e.task;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::optional<EventKind> upload_for_task(std::string_view task) {
  if (task == "train") return EventKind::kModelUpload;
  if (task == "weak_learners_validate") return EventKind::kErrorUpload;
  if (task == "adaboost_validate" || task == "aggregated_model_validation" ||
      task == "locally_tuned_model_validation") {
    return EventKind::kMetricUpload;
  }
  return std::nullopt;
}

std::vector<std::string> check_barrier_invariants(const std::vector<Event>& events,
                                                  const BarrierCheck& expect) {
  std::vector<std::string> bad;
  const auto n = expect.num_collaborators;
  const auto per_round = expect.tasks.size();

  // Steps are numbered (round - 1) * tasks + task index.
  auto step_of = [&](const Event& e) -> std::optional<std::size_t> {
    auto it = std::find(expect.tasks.begin(), expect.tasks.end(), e.task);
    if (it == expect.tasks.end() || e.round == 0) return std::nullopt;
    return (e.round - 1) * per_round + static_cast<std::size_t>(it - expect.tasks.begin());
  };
  auto where = [](const Event& e) {
    return fmt::format("#{} {} collab={} task={} round={}", e.seq, to_string(e.kind),
                       e.collaborator ? fmt::format("{}", *e.collaborator) : "-", e.task, e.round);
  };

  std::map<std::size_t, std::set<CollaboratorId>> synchs, uploads, assigned;
  std::set<std::size_t> completed;
  std::map<CollaboratorId, std::uint32_t> last_round;
  std::map<std::uint32_t, int> decisions;
  std::size_t error_uploads = 0;

  for (const auto& e : events) {
    const bool stepped = e.kind == EventKind::kTaskAssign || e.kind == EventKind::kSynch ||
                         e.kind == EventKind::kProceed || e.kind == EventKind::kHold ||
                         e.kind == EventKind::kBarrierComplete ||
                         e.kind == EventKind::kModelUpload || e.kind == EventKind::kErrorUpload ||
                         e.kind == EventKind::kMetricUpload;
    std::optional<std::size_t> step;
    if (stepped) {
      step = step_of(e);
      if (!step) {
        bad.push_back(fmt::format("{}: unknown task or round", where(e)));
        continue;
      }
    }
    if (e.collaborator && stepped && e.kind != EventKind::kBarrierComplete) {
      auto& last = last_round[*e.collaborator];
      if (e.round < last) bad.push_back(fmt::format("{}: round regressed from {}", where(e), last));
      last = std::max(last, e.round);
    }

    switch (e.kind) {
      case EventKind::kTaskAssign:
        if (*step > 0 && !completed.contains(*step - 1)) {
          bad.push_back(fmt::format("{}: assigned before the previous barrier completed", where(e)));
        }
        assigned[*step].insert(*e.collaborator);
        break;
      case EventKind::kModelUpload:
      case EventKind::kErrorUpload:
      case EventKind::kMetricUpload:
        if (e.kind == EventKind::kErrorUpload) ++error_uploads;
        if (upload_for_task(e.task) != e.kind) {
          bad.push_back(fmt::format("{}: upload does not belong to this task", where(e)));
        }
        if (!assigned[*step].contains(*e.collaborator)) {
          bad.push_back(fmt::format("{}: upload for an unassigned task", where(e)));
        }
        uploads[*step].insert(*e.collaborator);
        break;
      case EventKind::kSynch:
        if (!assigned[*step].contains(*e.collaborator)) {
          bad.push_back(fmt::format("{}: synch for an unassigned task", where(e)));
        }
        synchs[*step].insert(*e.collaborator);
        break;
      case EventKind::kProceed:
        if (synchs[*step].size() != n) {
          bad.push_back(fmt::format("{}: PROCEED with {} of {} synchs", where(e),
                                    synchs[*step].size(), n));
        }
        if (upload_for_task(e.task) && uploads[*step].size() != n) {
          bad.push_back(fmt::format("{}: PROCEED with {} of {} uploads", where(e),
                                    uploads[*step].size(), n));
        }
        break;
      case EventKind::kHold:
        if (completed.contains(*step)) {
          bad.push_back(fmt::format("{}: HOLD after the barrier completed", where(e)));
        }
        break;
      case EventKind::kBarrierComplete:
        if (synchs[*step].size() != n) {
          bad.push_back(fmt::format("{}: barrier completed with {} of {} synchs", where(e),
                                    synchs[*step].size(), n));
        }
        if (*step > 0 && !completed.contains(*step - 1)) {
          bad.push_back(fmt::format("{}: barrier completed out of order", where(e)));
        }
        if (!completed.insert(*step).second) {
          bad.push_back(fmt::format("{}: barrier completed twice", where(e)));
        }
        break;
      case EventKind::kDecision:
        ++decisions[e.round];
        break;
      default:
        break;
    }
  }

  const std::size_t expected_steps = static_cast<std::size_t>(expect.rounds) * per_round;
  if (completed.size() != expected_steps) {
    bad.push_back(fmt::format("{} barriers completed, expected {}", completed.size(), expected_steps));
  }
  const int want = expect.adaboost ? 1 : 0;
  for (std::uint32_t r = 1; r <= expect.rounds; ++r) {
    auto it = decisions.find(r);
    int got = it == decisions.end() ? 0 : it->second;
    if (got != want) bad.push_back(fmt::format("round {}: {} decisions, expected {}", r, got, want));
  }
  for (const auto& [r, c] : decisions) {
    if (r == 0 || r > expect.rounds) bad.push_back(fmt::format("decision for stray round {}", r));
  }
  const bool validates = std::find(expect.tasks.begin(), expect.tasks.end(),
                                   "weak_learners_validate") != expect.tasks.end();
  const std::size_t want_errors = validates ? static_cast<std::size_t>(expect.rounds) * n : 0;
  if (error_uploads != want_errors) {
    bad.push_back(fmt::format("{} ERROR_UPLOADs, expected {}", error_uploads, want_errors));
  }
  return bad;
}

}  // namespace fedboost::protocol
