#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fedboost/boosting.hpp"
#include "fedboost/ensemble.hpp"
#include "fedboost/metrics.hpp"
#include "fedboost/protocol/event_log.hpp"
#include "fedboost/protocol/transport.hpp"
#include "fedboost/store.hpp"

namespace fedboost::protocol {

struct AggregatorConfig {
  FederationConfig federation;
  std::vector<std::string> tasks;
  WireOptions wire;
  RetentionPolicy retention;
  /// 0: the largest class count announced in HELLOs.
  std::uint32_t num_classes = 0;
  /// Held-out data for the per-round global F1.
  std::optional<DatasetShard> test_set;
};

struct StoreTracePoint {
  std::uint32_t round = 0;
  std::size_t inserted = 0;  // puts during this round
  std::size_t size = 0;      // entries after clean_up
};

struct FederationResult {
  StrongHypothesis ensemble;
  std::vector<RoundDecision> decisions;
  std::vector<MetricRecord> metrics;
  std::vector<StoreTracePoint> store_trace;
  std::vector<Event> events;
  std::uint32_t num_classes = 0;
  std::uint64_t total_samples = 0;
};

// Serves one federation. Each attached connection gets its own handler
// thread; every state transition happens under a single coordinator lock.
class Aggregator {
 public:
  explicit Aggregator(AggregatorConfig config);
  ~Aggregator();
  Aggregator(const Aggregator&) = delete;
  Aggregator& operator=(const Aggregator&) = delete;

  void attach(ConnectionPtr conn);
  /// Blocks until the federation finishes. Rethrows the first failure
  /// (CollaboratorDropped, DuplicateHello, ProtocolViolation, ...).
  FederationResult wait();
  /// Fails the federation from outside (e.g. a collaborator never connected).
  void abort(const Error& why);

  const EventLog& events() const { return log_; }

 private:
  struct Peer;
  struct Impl;

  void serve(Peer& peer);
  std::vector<Message> handle(Peer& peer, const Message& msg);
  void fail(const Error& why);

  AggregatorConfig config_;
  EventLog log_;
  std::unique_ptr<Impl> impl_;
};

/// Accepts exactly n collaborators on `listener`, then runs the federation.
FederationResult aggregator_serve(const AggregatorConfig& config, TcpListener& listener,
                                  std::chrono::milliseconds accept_timeout = std::chrono::minutes(5));

}  // namespace fedboost::protocol
