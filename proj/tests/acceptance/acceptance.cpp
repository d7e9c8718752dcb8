// Acceptance checks, one per criterion. Prints one PASS/FAIL line each.
//   fedboost_acceptance [--only N]...
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "fedboost/metrics.hpp"
#include "fedboost/orchestrator/bench.hpp"
#include "support.hpp"

using namespace fedboost;
using testing::data_path;
using testing::make_plan;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

const std::vector<std::uint64_t> kSeeds = {1, 2, 3, 4, 5};

// Single-collaborator federation against the sequential oracle.
Outcome oracle_equivalence() {
  constexpr double kAlphaTol = 1e-12;
  constexpr double kMaxSeconds = 30.0;
  const auto t0 = Clock::now();
  auto data = make_vowel_like(7, 600);
  std::size_t runs = 0;
  for (const auto& family : registered_families()) {
    for (auto seed : kSeeds) {
      auto plan = make_plan(family, 1, 20, seed);
      auto r = simulate(plan, data);
      auto prepared = prepare_data(plan, data);
      auto oracle = sequential_adaboost(plan.federation.learner, prepared.parts[0], 20, seed);
      const auto& fed = r.federation.ensemble;
      if (fed.size() != 20 || oracle.ensemble.size() != 20) {
        return {false, fmt::format("{} seed {}: {} terms", family, seed, fed.size())};
      }
      for (std::size_t t = 0; t < 20; ++t) {
        const double a = fed.term(t).alpha, b = oracle.ensemble.term(t).alpha;
        if (!testing::rel_close(a, b, kAlphaTol)) {
          return {false, fmt::format("{} seed {} round {}: alpha {} vs {}", family, seed, t + 1, a, b)};
        }
      }
      for (const auto* x : {&prepared.test.features, &prepared.parts[0].features}) {
        if (predict_strong(fed, *x) != predict_strong(oracle.ensemble, *x)) {
          return {false, fmt::format("{} seed {}: predictions differ", family, seed)};
        }
      }
      ++runs;
    }
  }
  const double secs = seconds_since(t0);
  return {secs < kMaxSeconds, fmt::format("{} runs (4 families x 5 seeds, T=20) identical; {:.1f} s "
                                          "(limit {:.0f} s)", runs, secs, kMaxSeconds)};
}

struct TableCase {
  std::string file;
  double threshold;
};

Plan table_plan(std::uint64_t seed, std::uint32_t rounds = 300) {
  auto plan = make_plan("tree", 10, rounds, seed, {{"max_leaves", 10}});
  plan.protocol.poll_interval = 0.01;
  plan.protocol.wait_interval = 0.01;
  return plan;
}

// Mean final F1 over five seeds, n=10, trees with 10 leaves, T=300.
Outcome table_reproduction() {
  const std::vector<TableCase> cases = {
      {"kr-vs-kp.csv", 0.97}, {"splice.csv", 0.92}, {"vehicle.csv", 0.70}};
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    auto data = ingest_csv(data_path(c.file)).shard;
    std::vector<double> f1;
    for (auto seed : kSeeds) f1.push_back(simulate(table_plan(seed), data).final_f1());
    auto ci = mean_ci95(f1);
    ok = ok && ci.mean >= c.threshold;
    detail += fmt::format("{} F1 {:.4f}+-{:.4f} (>= {:.2f}); ", c.file, ci.mean, ci.half_width,
                          c.threshold);
  }
  detail += fmt::format("{:.0f} s", seconds_since(t0));
  return {ok, detail};
}

Outcome learning_curve() {
  constexpr double kEarlyF1 = 0.90;
  constexpr std::size_t kEarlyRounds = 50;
  auto data = ingest_csv(data_path("kr-vs-kp.csv")).shard;
  bool ok = true;
  std::string detail;
  for (auto seed : kSeeds) {
    auto curve = simulate(table_plan(seed), data).f1_curve();
    if (curve.size() != 300) return {false, fmt::format("seed {}: {} points", seed, curve.size())};
    const double at10 = curve[9], at300 = curve[299];
    const double early = *std::max_element(curve.begin(), curve.begin() + kEarlyRounds);
    std::size_t first = 0;
    while (first < curve.size() && curve[first] < kEarlyF1) ++first;
    ok = ok && at300 >= at10 && early >= kEarlyF1;
    detail += fmt::format("seed {}: F1@10 {:.4f} F1@300 {:.4f}, >= {:.2f} at round {}; ", seed, at10,
                          at300, kEarlyF1, first + 1);
  }
  return {ok, detail};
}

// Same plan, only the family changes; 10-class synthetic data.
Outcome flexibility() {
  auto data = make_vowel_like(11, 1000);
  std::string detail;
  bool ok = true;
  for (const auto& family : registered_families()) {
    auto plan = make_plan(family, 10, 100, 3);
    plan.protocol.poll_interval = 0.002;
    auto r = simulate(plan, data);
    auto prepared = prepare_data(plan, data);
    const double baseline = majority_baseline_f1(prepared.test.labels, data.num_classes);
    const bool done = r.federation.ensemble.size() == 100;
    ok = ok && done && r.final_f1() > baseline;
    detail += fmt::format("{} F1 {:.3f} vs majority {:.3f}{}; ", family, r.final_f1(), baseline,
                          done ? "" : " (incomplete)");
  }
  return {ok, detail};
}

// Random n, T, data sizes and per-task delays; every run's event log is checked.
Outcome protocol_safety() {
  constexpr int kRuns = 1000;
  constexpr double kMaxSeconds = 300.0;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::size_t violations = 0, wrong_decisions = 0;
  std::string first_problem;
  for (int run = 0; run < kRuns; ++run) {
    const auto n = static_cast<std::uint32_t>(std::uniform_int_distribution<int>(2, 8)(rng));
    const auto rounds = static_cast<std::uint32_t>(std::uniform_int_distribution<int>(1, 3)(rng));
    auto plan = make_plan(run % 2 ? "stump" : "tree", n, rounds, rng(), {});
    plan.protocol.poll_interval = 0.0002;
    plan.protocol.wait_interval = 0.0002;
    plan.data.test_fraction = 0.0;
    if (run % 3 == 0) {
      plan.tasks = {"aggregated_model_validation", "train", "weak_learners_validate", "adaboost_update",
                    "adaboost_validate", "locally_tuned_model_validation"};
    }
    auto data = make_blobs(n * 12, 2, 3, 1.5, rng());
    const std::uint64_t delay_seed = rng();
    SimulateOptions opts;
    opts.before_task = [delay_seed](CollaboratorId id, std::string_view task, std::uint32_t round) {
      std::mt19937_64 local(delay_seed ^ (id * 0x9E3779B97F4A7C15ull) ^ (round << 20) ^ task.size());
      const auto us = std::uniform_int_distribution<int>(0, 2000)(local);
      if (us > 1500) std::this_thread::sleep_for(std::chrono::microseconds(us));
    };
    auto r = simulate(plan, data, opts);
    protocol::BarrierCheck check{n, rounds, plan.tasks, true};
    auto bad = protocol::check_barrier_invariants(r.federation.events, check);
    const auto decisions = static_cast<std::size_t>(
        std::count_if(r.federation.events.begin(), r.federation.events.end(),
                      [](const auto& e) { return e.kind == protocol::EventKind::kDecision; }));
    const auto broadcasts = static_cast<std::size_t>(
        std::count_if(r.federation.events.begin(), r.federation.events.end(), [](const auto& e) {
          return e.kind == protocol::EventKind::kDecisionBroadcast;
        }));
    if (!bad.empty()) {
      violations += bad.size();
      if (first_problem.empty()) first_problem = fmt::format("run {}: {}", run, bad.front());
    }
    if (decisions != rounds || broadcasts != static_cast<std::size_t>(rounds) * n) {
      ++wrong_decisions;
      if (first_problem.empty()) {
        first_problem = fmt::format("run {}: {} decisions, {} broadcasts", run, decisions, broadcasts);
      }
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = violations == 0 && wrong_decisions == 0 && secs < kMaxSeconds;
  return {ok, fmt::format("{} schedules, {} barrier violations, {} runs with a wrong decision count; "
                          "{:.0f} s (limit {:.0f} s){}", kRuns, violations, wrong_decisions, secs,
                          kMaxSeconds, first_problem.empty() ? "" : "; " + first_problem)};
}

Outcome scale_invariance() {
  auto data = make_vowel_like(5, 800);
  std::string detail;
  bool ok = true;
  for (const auto& family : {"tree", "stump"}) {
    auto plan = make_plan(family, 4, 25, 9);
    auto ref = simulate(plan, data);
    auto ref_pred = predict_strong(ref.federation.ensemble, data.features);
    for (double lambda : {1e-3, 7.0, 1e3}) {
      SimulateOptions opts;
      opts.initial_weight = lambda;
      auto r = simulate(plan, data, opts);
      bool same = r.federation.decisions.size() == ref.federation.decisions.size();
      for (std::size_t t = 0; same && t < ref.federation.decisions.size(); ++t) {
        const auto& a = r.federation.decisions[t];
        const auto& b = ref.federation.decisions[t];
        same = a.best_index == b.best_index && a.alpha == b.alpha && a.global_error == b.global_error;
      }
      same = same && predict_strong(r.federation.ensemble, data.features) == ref_pred;
      ok = ok && same;
      detail += fmt::format("{} lambda={:g}: {}; ", family, lambda, same ? "bit-identical" : "DIFFERS");
    }
  }
  return {ok, detail};
}

Outcome store_boundedness() {
  auto data = make_blobs(400, 3, 3, 1.5, 3);
  auto plan = make_plan("stump", 4, 100, 3);
  plan.store = RetentionPolicy::last(2);
  auto bounded = simulate(plan, data).federation.store_trace;
  plan.store = RetentionPolicy::unbounded();
  auto unbounded = simulate(plan, data).federation.store_trace;
  if (bounded.size() != 100 || unbounded.size() != 100) return {false, "trace has the wrong length"};

  std::size_t worst = 0, per_round = 0;
  bool ok = true;
  for (const auto& p : bounded) {
    ok = ok && p.size <= 2 * p.inserted;
    worst = std::max(worst, p.size);
    per_round = std::max(per_round, p.inserted);
  }
  // Linear growth: size after round t equals every insert so far, with a constant per-round count.
  std::size_t cumulative = 0;
  bool linear = true;
  for (std::size_t t = 0; t < unbounded.size(); ++t) {
    cumulative += unbounded[t].inserted;
    linear = linear && unbounded[t].size == cumulative && unbounded[t].inserted == unbounded[0].inserted;
  }
  ok = ok && linear;
  return {ok, fmt::format("window=2: max size {} with {} inserts/round (<= 2x each round: {}); "
                          "unbounded: {} -> {} entries, linear: {}",
                          worst, per_round, ok ? "yes" : "no", unbounded.front().size,
                          unbounded.back().size, linear ? "yes" : "no")};
}

// Loopback TCP, T=100, n=8, trees: baseline protocol vs retention window + 0.01 s polls.
Outcome ablation_direction() {
  constexpr double kMinSpeedup = 1.5;
  auto data = ingest_csv(data_path("kr-vs-kp.csv")).shard;
  auto plan = make_plan("tree", 8, 100, 1, {{"max_leaves", 10}});
  plan.protocol.poll_interval = 0.01;
  plan.protocol.wait_interval = 0.01;
  BenchOptions opts;
  opts.mode = BenchMode::kAblation;
  opts.collaborators = {8};
  opts.reps = 1;
  opts.transport = Transport::kTcp;
  opts.only = {"baseline", "retention+poll", "all_on"};
  auto table = bench(plan, data, opts);
  std::fputs(table.to_text().c_str(), stdout);
  const BenchRow* target = nullptr;
  for (const auto& row : table.rows) {
    if (row.label == "retention+poll") target = &row;
  }
  if (!target) return {false, "retention+poll row missing"};
  std::string detail;
  for (const auto& row : table.rows) {
    detail += fmt::format("{} {:.1f} s (x{:.2f}); ", row.label, row.wall.mean, row.speedup);
  }
  return {target->speedup >= kMinSpeedup,
          detail + fmt::format("required retention+poll speedup >= {}", kMinSpeedup)};
}

Outcome scaling_harness() {
  auto data = ingest_csv(data_path("kr-vs-kp.csv")).shard;
  auto plan = make_plan("tree", 1, 20, 1, {{"max_leaves", 10}});
  plan.protocol.poll_interval = 0.01;
  BenchOptions opts;
  opts.collaborators = {1, 2, 4, 8};
  opts.reps = 3;
  std::string detail;
  bool ok = true;
  for (auto mode : {BenchMode::kStrong, BenchMode::kWeak}) {
    opts.mode = mode;
    auto table = bench(plan, data, opts);
    std::fputs(table.to_text().c_str(), stdout);
    ok = ok && table.rows.size() == 4 && table.rows.front().baseline;
    for (const auto& row : table.rows) ok = ok && row.wall.mean > 0 && row.per_round > 0;
    if (mode == BenchMode::kStrong && table.rows.size() == 4) {
      const double e8 = table.rows.back().efficiency;
      // Qualitative: efficiency falls below the n=1 baseline as n grows.
      ok = ok && e8 < table.rows.front().efficiency;
      detail += "strong efficiency";
      for (const auto& row : table.rows) detail += fmt::format(" n={}:{:.2f}", row.collaborators, row.efficiency);
      detail += "; ";
    } else if (table.rows.size() == 4) {
      detail += "weak per-round";
      for (const auto& row : table.rows) detail += fmt::format(" n={}:{:.3f}s", row.collaborators, row.per_round);
    }
  }
  return {ok, detail};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "oracle equivalence", oracle_equivalence},
      {2, "table reproduction", table_reproduction},
      {3, "learning curve shape", learning_curve},
      {4, "learner flexibility", flexibility},
      {5, "protocol safety", protocol_safety},
      {6, "scale invariance", scale_invariance},
      {7, "store boundedness", store_boundedness},
      {8, "ablation direction", ablation_direction},
      {9, "scaling harness", scaling_harness},
  };
  spdlog::set_level(spdlog::level::warn);
  std::set<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      only.insert(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: %s [--only N]...\n", argv[0]);
      return 2;
    }
  }
  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.contains(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, fmt::format("threw: {}", e.what())};
    }
    std::printf("criterion %d (%s): %s - %s\n", c.id, c.name, o.pass ? "PASS" : "FAIL",
                o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
