#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <string_view>

#include "fedboost/boosting.hpp"
#include "fedboost/ensemble.hpp"
#include "fedboost/protocol/transport.hpp"
#include "fedboost/store.hpp"

namespace fedboost::protocol {

struct CollaboratorConfig {
  CollaboratorId id = 0;
  WireOptions wire;
  /// Sleep between SYNCH polls while held at a barrier.
  std::chrono::duration<double> poll_interval{0.01};
  /// Sleep after a WAIT reply to TASK_POLL.
  std::chrono::duration<double> wait_interval{0.01};
  RetentionPolicy retention;
  /// Starting value of every sample weight.
  double initial_weight = 1.0;
  /// Called before each task runs; tests use it to inject delays.
  std::function<void(std::string_view task, std::uint32_t round)> before_task;
};

struct CollaboratorResult {
  std::uint32_t rounds_completed = 0;
  StrongHypothesis ensemble;
  CollaboratorBoostState state;
  std::size_t holds = 0;
  std::size_t waits = 0;
  std::size_t store_size = 0;
};

/// Runs the collaborator loop until the aggregator says BYE. Connection loss
/// or an ABORT throws AggregatorGone.
CollaboratorResult run_collaborator(Connection& conn, DatasetShard shard,
                                    const CollaboratorConfig& config);

}  // namespace fedboost::protocol
