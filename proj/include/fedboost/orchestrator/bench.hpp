#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fedboost/orchestrator/simulate.hpp"

namespace fedboost {

enum class BenchMode { kStrong, kWeak, kAblation };
std::string_view to_string(BenchMode mode);
BenchMode parse_bench_mode(std::string_view s);

struct Interval {
  double mean = 0.0;
  double half_width = 0.0;  // 95% Student-t; 0 for a single sample
};
Interval mean_ci95(const std::vector<double>& samples);

struct BenchRow {
  std::string label;
  std::uint32_t collaborators = 0;
  std::vector<double> seconds;  // one per repetition
  Interval wall;
  double per_round = 0.0;       // mean seconds per federated round
  double speedup = 0.0;         // baseline mean / this mean
  double efficiency = 0.0;      // speedup / (n / n_baseline); strong mode only
  bool baseline = false;
};

struct BenchTable {
  BenchMode mode{};
  std::vector<BenchRow> rows;

  std::string to_text() const;
  std::string to_jsonl() const;
};

// Ablation settings from the frame-size/codec/retention/poll toggles.
struct AblationConfig {
  std::string name;
  Plan plan;
};
/// The "off" side of every toggle: 2 MiB frames, JSON codec, unbounded store,
/// 1 s SYNCH polls and 10 s WAIT sleeps.
Plan baseline_protocol(Plan plan);
/// baseline, each toggle alone, retention+poll, all-on.
std::vector<AblationConfig> ablation_configs(const Plan& base);

struct BenchOptions {
  BenchMode mode = BenchMode::kStrong;
  std::vector<std::uint32_t> collaborators = {1, 2, 4, 8};
  std::uint32_t reps = 5;
  Transport transport = Transport::kInProcess;
  /// Ablation: run only these configurations (all when empty).
  std::vector<std::string> only;
};

BenchTable bench(const Plan& plan, const DatasetShard& data, const BenchOptions& options);

}  // namespace fedboost
