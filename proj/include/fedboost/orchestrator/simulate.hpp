#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fedboost/orchestrator/plan.hpp"
#include "fedboost/protocol/aggregator.hpp"
#include "fedboost/protocol/collaborator.hpp"

namespace fedboost {

enum class Transport { kInProcess, kTcp };

struct SimulateOptions {
  Transport transport = Transport::kInProcess;
  /// Give every collaborator the whole training set (weak scaling).
  bool replicate_data = false;
  /// Starting sample weight on every collaborator.
  double initial_weight = 1.0;
  /// Injected before each collaborator task; used for schedule fuzzing.
  std::function<void(CollaboratorId, std::string_view task, std::uint32_t round)> before_task;
};

struct RunReport {
  Plan plan;
  protocol::FederationResult federation;
  std::vector<protocol::CollaboratorResult> collaborators;
  double wall_seconds = 0.0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;

  /// Global macro F1 per round, in round order.
  std::vector<double> f1_curve() const;
  double final_f1() const;
};

/// The shards a simulation would hand to each collaborator, plus the held-out set.
struct PreparedData {
  std::vector<DatasetShard> parts;
  DatasetShard test;
};
PreparedData prepare_data(const Plan& plan, const DatasetShard& data, bool replicate = false);

/// Aggregator plus n collaborators in one process, over in-memory pipes or
/// TCP loopback. Throws the federation's first error.
RunReport simulate(const Plan& plan, const DatasetShard& data, const SimulateOptions& options = {});

/// Line-delimited records {round, collaborator, metric, value}, then one
/// {"summary": ...} line.
std::string report_jsonl(const RunReport& report);
/// Writes `out`, `out`.ensemble and `out`.events.jsonl.
void write_report(const RunReport& report, const std::filesystem::path& out);

}  // namespace fedboost
