#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedboost/core.hpp"

namespace fedboost::protocol {

enum class EventKind {
  kHello,
  kTaskAssign,
  kWait,
  kModelUpload,
  kHypothesisBroadcast,  // one per recipient
  kErrorUpload,
  kDecision,             // one per round: the aggregator's decision
  kDecisionBroadcast,    // one per recipient
  kMetricUpload,
  kSynch,
  kHold,
  kProceed,
  kBarrierComplete,      // collaborator = none
  kBye,
};

std::string_view to_string(EventKind kind);

struct Event {
  std::uint64_t seq = 0;
  double t = 0.0;  // seconds since the log was created
  EventKind kind{};
  std::optional<CollaboratorId> collaborator;
  std::string task;
  std::uint32_t round = 0;
};

// Ordered record of protocol events as seen by the aggregator's coordinator.
class EventLog {
 public:
  EventLog();

  void record(EventKind kind, std::optional<CollaboratorId> collaborator, std::string_view task,
              std::uint32_t round);
  std::vector<Event> events() const;
  std::size_t count(EventKind kind) const;

  /// One JSON object per line.
  std::string to_jsonl() const;

 private:
  mutable std::mutex mu_;
  std::chrono::steady_clock::time_point start_;
  std::vector<Event> events_;
};

/// One JSON object per line.
std::string to_jsonl(const std::vector<Event>& events);

/// Upload every collaborator owes for `task` before its barrier can open, if any.
std::optional<EventKind> upload_for_task(std::string_view task);

struct BarrierCheck {
  std::uint32_t num_collaborators = 0;
  std::uint32_t rounds = 0;
  std::vector<std::string> tasks;  // per-round task order
  bool adaboost = true;            // expect one decision per round
};

/// Every violated invariant, in log order; empty when the log is clean:
///  - PROCEED for (task, round) only after all n SYNCHs for it,
///  - no TASK_ASSIGN for a step before the previous step's barrier completed,
///  - every peer uploaded for the task before anyone got PROCEED,
///  - rounds never regress; exactly one decision per round; T*n ERROR_UPLOADs.
std::vector<std::string> check_barrier_invariants(const std::vector<Event>& events,
                                                  const BarrierCheck& expect);

}  // namespace fedboost::protocol
