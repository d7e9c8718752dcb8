// fedboost: run a federated boosting aggregator, collaborator, local
// simulation or benchmark from a YAML plan.
//
// Exit status: 0 success, 2 configuration error, 3 federation error.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "fedboost/orchestrator/bench.hpp"
#include "fedboost/orchestrator/dataset.hpp"
#include "fedboost/orchestrator/plan.hpp"
#include "fedboost/orchestrator/simulate.hpp"

using namespace fedboost;

namespace {

constexpr int kConfigError = 2;
constexpr int kFederationError = 3;

DatasetShard load_data(const Plan& plan, const std::string& override_path) {
  const auto path = override_path.empty() ? plan.data.path : override_path;
  if (path.empty()) throw Error(ErrorCode::kMissingField, "no data: pass --data or set data.path");
  return ingest_csv(path, plan.data.labels).shard;
}

std::vector<std::uint32_t> parse_counts(const std::string& list) {
  std::vector<std::uint32_t> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      auto v = std::stoul(item, &used);
      if (used != item.size() || v == 0) throw std::invalid_argument(item);
      out.push_back(static_cast<std::uint32_t>(v));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kBadValue, "bad collaborator count '" + item + "'");
    }
  }
  if (out.empty()) throw Error(ErrorCode::kBadValue, "empty collaborator list");
  return out;
}

protocol::CollaboratorConfig collaborator_config(const Plan& plan, CollaboratorId id) {
  protocol::CollaboratorConfig cfg;
  cfg.id = id;
  cfg.wire = wire_options(plan);
  cfg.poll_interval = std::chrono::duration<double>(plan.protocol.poll_interval);
  cfg.wait_interval = std::chrono::duration<double>(plan.protocol.wait_interval);
  cfg.retention = plan.store;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated AdaBoost aggregator, collaborator, simulator and benchmark"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")->capture_default_str();

  std::string plan_path, data_path, listen, connect, out_path, test_data, mode_name, counts;
  std::string transport_name = "inproc";
  std::uint32_t id = 0, reps = 5;
  std::optional<std::uint32_t> collaborators;
  std::optional<std::uint64_t> seed;

  auto* agg = app.add_subcommand("aggregator", "Serve a federation over TCP");
  agg->add_option("--plan", plan_path, "Plan file")->required();
  agg->add_option("--listen", listen, "host:port to listen on")->required();
  agg->add_option("--test-data", test_data, "Held-out CSV for the global F1");
  agg->add_option("--out", out_path, "Run report (JSONL)");

  auto* col = app.add_subcommand("collaborator", "Join a federation with local data");
  col->add_option("--plan", plan_path, "Plan file")->required();
  col->add_option("--id", id, "Collaborator id in [0, n)")->required();
  col->add_option("--data", data_path, "Local CSV")->required();
  col->add_option("--connect", connect, "Aggregator host:port")->required();

  auto* sim = app.add_subcommand("simulate", "Run aggregator and collaborators in one process");
  sim->add_option("--plan", plan_path, "Plan file")->required();
  sim->add_option("--data", data_path, "CSV (defaults to data.path)");
  sim->add_option("--collaborators", collaborators, "Override federation.collaborators");
  sim->add_option("--seed", seed, "Override federation.seed and data.seed");
  sim->add_option("--out", out_path, "Run report (JSONL); also writes .ensemble and .events.jsonl");
  sim->add_option("--transport", transport_name, "inproc|tcp")->capture_default_str();

  auto* bch = app.add_subcommand("bench", "Strong/weak scaling or protocol ablation timings");
  bch->add_option("--plan", plan_path, "Plan file")->required();
  bch->add_option("--data", data_path, "CSV (defaults to data.path)");
  bch->add_option("--mode", mode_name, "strong|weak|ablation")->required();
  bch->add_option("--collaborators", counts, "Comma-separated counts, e.g. 1,2,4,8")
      ->default_str("1,2,4,8");
  bch->add_option("--reps", reps, "Repetitions per configuration")->capture_default_str();
  bch->add_option("--transport", transport_name, "inproc|tcp (ablation always uses tcp)");
  bch->add_option("--out", out_path, "Table as JSONL");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kConfigError;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    auto plan = load_plan(plan_path);
    auto transport = Transport::kInProcess;
    if (transport_name == "tcp") {
      transport = Transport::kTcp;
    } else if (transport_name != "inproc") {
      throw Error(ErrorCode::kBadValue, "transport must be inproc or tcp");
    }

    if (*agg) {
      protocol::AggregatorConfig cfg;
      cfg.federation = plan.federation;
      cfg.tasks = plan.tasks;
      cfg.wire = wire_options(plan);
      cfg.retention = plan.store;
      if (!test_data.empty()) {
        auto test = ingest_csv(test_data, plan.data.labels).shard;
        cfg.num_classes = test.num_classes;
        cfg.test_set = std::move(test);
      } else if (!plan.data.labels.empty()) {
        cfg.num_classes = static_cast<std::uint32_t>(plan.data.labels.size());
      }
      protocol::TcpListener listener(protocol::parse_endpoint(listen));
      spdlog::info("listening on port {} for {} collaborators", listener.port(),
                   plan.federation.num_collaborators);
      RunReport report;
      report.plan = plan;
      report.federation = protocol::aggregator_serve(cfg, listener);
      report.train_size = report.federation.total_samples;
      report.test_size = cfg.test_set ? cfg.test_set->size() : 0;
      if (!out_path.empty()) write_report(report, out_path);
      auto text = report_jsonl(report);
      std::cout << text.substr(text.rfind("{\"summary\""));
    } else if (*col) {
      auto shard = ingest_csv(data_path, plan.data.labels).shard;
      auto conn = protocol::tcp_connect(protocol::parse_endpoint(connect), std::chrono::seconds(60));
      auto result = protocol::run_collaborator(*conn, std::move(shard), collaborator_config(plan, id));
      spdlog::info("collaborator {} finished {} rounds ({} holds)", id, result.rounds_completed,
                   result.holds);
    } else if (*sim) {
      if (collaborators) plan.federation.num_collaborators = *collaborators;
      if (seed) {
        plan.federation.seed = *seed;
        plan.data.seed = *seed;
      }
      auto data = load_data(plan, data_path);
      auto report = simulate(plan, data, {.transport = transport});
      if (!out_path.empty()) write_report(report, out_path);
      auto text = report_jsonl(report);
      std::cout << text.substr(text.rfind("{\"summary\""));
    } else if (*bch) {
      auto data = load_data(plan, data_path);
      BenchOptions opts;
      opts.mode = parse_bench_mode(mode_name);
      opts.collaborators = parse_counts(counts.empty() ? "1,2,4,8" : counts);
      opts.reps = reps;
      opts.transport = opts.mode == BenchMode::kAblation ? Transport::kTcp : transport;
      auto table = bench(plan, data, opts);
      std::cout << table.to_text();
      if (!out_path.empty()) {
        std::ofstream f(out_path);
        if (!f) throw Error(ErrorCode::kIoError, "cannot write " + out_path);
        f << table.to_jsonl();
      }
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return e.is_config_error() ? kConfigError : kFederationError;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kFederationError;
  }
  return 0;
}
