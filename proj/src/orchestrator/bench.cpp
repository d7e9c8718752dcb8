#include "fedboost/orchestrator/bench.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

namespace fedboost {

std::string_view to_string(BenchMode mode) {
  switch (mode) {
    case BenchMode::kStrong: return "strong";
    case BenchMode::kWeak: return "weak";
    case BenchMode::kAblation: return "ablation";
  }
  return "?";
}

BenchMode parse_bench_mode(std::string_view s) {
  if (s == "strong") return BenchMode::kStrong;
  if (s == "weak") return BenchMode::kWeak;
  if (s == "ablation") return BenchMode::kAblation;
  throw Error(ErrorCode::kBadValue, fmt::format("unknown bench mode '{}'", s));
}

Interval mean_ci95(const std::vector<double>& samples) {
  if (samples.empty()) return {};
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  if (samples.size() == 1) return {mean, 0.0};
  double ss = 0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1));
  boost::math::students_t dist(n - 1);
  const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
  return {mean, t * sd / std::sqrt(n)};
}

Plan baseline_protocol(Plan plan) {
  plan.protocol.max_frame_size = protocol::kBaselineMaxFrameSize;
  plan.protocol.codec = protocol::EnvelopeCodec::kBaseline;
  plan.store = RetentionPolicy::unbounded();
  plan.protocol.poll_interval = 1.0;
  plan.protocol.wait_interval = 10.0;
  return plan;
}

std::vector<AblationConfig> ablation_configs(const Plan& base) {
  const Plan off = baseline_protocol(base);
  auto frame = [](Plan& p) { p.protocol.max_frame_size = protocol::kDefaultMaxFrameSize; };
  auto codec = [](Plan& p) { p.protocol.codec = protocol::EnvelopeCodec::kCompact; };
  auto retention = [](Plan& p) { p.store = RetentionPolicy::last(2); };
  auto poll = [](Plan& p) {
    p.protocol.poll_interval = 0.01;
    p.protocol.wait_interval = 0.01;
  };
  std::vector<AblationConfig> out;
  out.push_back({"baseline", off});
  auto with = [&](std::string name, auto... toggles) {
    Plan p = off;
    (toggles(p), ...);
    out.push_back({std::move(name), std::move(p)});
  };
  with("frame_size", frame);
  with("codec", codec);
  with("retention", retention);
  with("poll", poll);
  with("retention+poll", retention, poll);
  with("all_on", frame, codec, retention, poll);
  return out;
}

namespace {

BenchRow run_row(std::string label, const Plan& plan, const DatasetShard& data,
                 const BenchOptions& options, bool replicate) {
  BenchRow row;
  row.label = std::move(label);
  row.collaborators = plan.federation.num_collaborators;
  SimulateOptions sim;
  sim.transport = options.transport;
  sim.replicate_data = replicate;
  for (std::uint32_t r = 0; r < options.reps; ++r) {
    auto report = simulate(plan, data, sim);
    row.seconds.push_back(report.wall_seconds);
    spdlog::info("bench {} rep {}: {:.3f} s", row.label, r + 1, report.wall_seconds);
  }
  row.wall = mean_ci95(row.seconds);
  row.per_round = row.wall.mean / plan.federation.rounds;
  return row;
}

}  // namespace

BenchTable bench(const Plan& plan, const DatasetShard& data, const BenchOptions& options) {
  if (options.reps == 0) throw Error(ErrorCode::kBadValue, "reps must be >= 1");
  BenchTable table;
  table.mode = options.mode;
  if (options.mode == BenchMode::kAblation) {
    Plan base = plan;
    if (!options.collaborators.empty()) base.federation.num_collaborators = options.collaborators.front();
    for (auto& cfg : ablation_configs(base)) {
      if (!options.only.empty() &&
          std::find(options.only.begin(), options.only.end(), cfg.name) == options.only.end()) {
        continue;
      }
      table.rows.push_back(run_row(cfg.name, cfg.plan, data, options, false));
    }
  } else {
    if (options.collaborators.empty()) throw Error(ErrorCode::kBadValue, "no collaborator counts");
    for (auto n : options.collaborators) {
      Plan p = plan;
      p.federation.num_collaborators = n;
      table.rows.push_back(run_row(fmt::format("n={}", n), p, data, options,
                                   options.mode == BenchMode::kWeak));
    }
  }
  if (table.rows.empty()) return table;

  // Baseline: the n = 1 row (or the first row) for scaling, the "baseline" config for ablation.
  auto base_it = table.rows.begin();
  if (options.mode != BenchMode::kAblation) {
    auto one = std::find_if(table.rows.begin(), table.rows.end(),
                            [](const BenchRow& r) { return r.collaborators == 1; });
    if (one != table.rows.end()) base_it = one;
  }
  base_it->baseline = true;
  const BenchRow base = *base_it;
  for (auto& row : table.rows) {
    row.speedup = base.wall.mean / row.wall.mean;
    if (options.mode == BenchMode::kStrong) {
      row.efficiency = row.speedup / (static_cast<double>(row.collaborators) / base.collaborators);
    } else if (options.mode == BenchMode::kWeak) {
      // Weak scaling keeps work per collaborator fixed, so ideal time is constant.
      row.efficiency = row.speedup;
    }
  }
  return table;
}

std::string BenchTable::to_text() const {
  std::string out = fmt::format("{:<16} {:>4} {:>12} {:>10} {:>12} {:>8} {:>10}\n", "config", "n",
                                "mean_s", "ci95_s", "per_round_s", "speedup", "efficiency");
  for (const auto& r : rows) {
    out += fmt::format("{:<16} {:>4} {:>12.4f} {:>10.4f} {:>12.5f} {:>8.3f} {:>10}{}\n", r.label,
                       r.collaborators, r.wall.mean, r.wall.half_width, r.per_round, r.speedup,
                       mode == BenchMode::kAblation ? "-" : fmt::format("{:.3f}", r.efficiency),
                       r.baseline ? "  (baseline)" : "");
  }
  return out;
}

std::string BenchTable::to_jsonl() const {
  std::string out;
  for (const auto& r : rows) {
    nlohmann::json j = {{"mode", to_string(mode)},
                        {"config", r.label},
                        {"collaborators", r.collaborators},
                        {"seconds", r.seconds},
                        {"mean_s", r.wall.mean},
                        {"ci95_s", r.wall.half_width},
                        {"per_round_s", r.per_round},
                        {"speedup", r.speedup},
                        {"baseline", r.baseline}};
    if (mode != BenchMode::kAblation) j["efficiency"] = r.efficiency;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace fedboost
