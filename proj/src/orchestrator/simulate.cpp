#include "fedboost/orchestrator/simulate.hpp"

#include <chrono>
#include <fstream>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "fedboost/orchestrator/dataset.hpp"

namespace fedboost {

std::vector<double> RunReport::f1_curve() const {
  std::vector<double> curve;
  for (const auto& m : federation.metrics) {
    if (!m.collaborator && m.name == "f1_macro") curve.push_back(m.value);
  }
  return curve;
}

double RunReport::final_f1() const {
  auto curve = f1_curve();
  if (curve.empty()) throw Error(ErrorCode::kInvalidArgument, "run produced no global F1");
  return curve.back();
}

PreparedData prepare_data(const Plan& plan, const DatasetShard& data, bool replicate) {
  PreparedData out;
  DatasetShard train = data;
  if (plan.data.test_fraction > 0) {
    auto split = train_test_split(data, plan.data.test_fraction, plan.data.seed);
    train = std::move(split.train);
    out.test = std::move(split.test);
  }
  const auto n = plan.federation.num_collaborators;
  if (replicate) {
    out.parts.assign(n, train);
  } else {
    out.parts = split_iid(train, n, plan.data.seed);
  }
  return out;
}

RunReport simulate(const Plan& plan, const DatasetShard& data, const SimulateOptions& options) {
  validate_plan(plan);
  validate_shard(data);
  auto prepared = prepare_data(plan, data, options.replicate_data);
  const auto n = plan.federation.num_collaborators;

  protocol::AggregatorConfig agg_config;
  agg_config.federation = plan.federation;
  agg_config.tasks = plan.tasks;
  agg_config.wire = wire_options(plan);
  agg_config.retention = plan.store;
  agg_config.num_classes = data.num_classes;
  if (prepared.test.size() > 0) {
    prepared.test.num_classes = data.num_classes;
    agg_config.test_set = prepared.test;
  }

  RunReport report;
  report.plan = plan;
  report.train_size = 0;
  for (const auto& p : prepared.parts) report.train_size += p.size();
  report.test_size = prepared.test.size();
  report.collaborators.resize(n);

  const auto start = std::chrono::steady_clock::now();
  protocol::Aggregator aggregator(agg_config);
  std::unique_ptr<protocol::TcpListener> listener;
  if (options.transport == Transport::kTcp) {
    listener = std::make_unique<protocol::TcpListener>(protocol::Endpoint{"127.0.0.1", 0});
  }

  std::vector<protocol::ConnectionPtr> collab_ends(n);
  if (options.transport == Transport::kInProcess) {
    for (std::uint32_t i = 0; i < n; ++i) {
      auto [agg_end, collab_end] = protocol::make_pipe_pair();
      aggregator.attach(std::move(agg_end));
      collab_ends[i] = std::move(collab_end);
    }
  }

  std::vector<std::optional<Error>> collab_errors(n);
  std::vector<std::thread> threads;
  for (std::uint32_t i = 0; i < n; ++i) {
    threads.emplace_back([&, i] {
      protocol::CollaboratorConfig cfg;
      cfg.id = i;
      cfg.wire = wire_options(plan);
      cfg.poll_interval = std::chrono::duration<double>(plan.protocol.poll_interval);
      cfg.wait_interval = std::chrono::duration<double>(plan.protocol.wait_interval);
      cfg.retention = plan.store;
      cfg.initial_weight = options.initial_weight;
      if (options.before_task) {
        cfg.before_task = [&, i](std::string_view task, std::uint32_t round) {
          options.before_task(i, task, round);
        };
      }
      try {
        auto conn = options.transport == Transport::kTcp
                        ? protocol::tcp_connect({"127.0.0.1", listener->port()})
                        : std::move(collab_ends[i]);
        try {
          report.collaborators[i] = protocol::run_collaborator(*conn, prepared.parts[i], cfg);
        } catch (...) {
          conn->close();
          throw;
        }
      } catch (const Error& e) {
        collab_errors[i] = e;
      }
    });
  }

  if (options.transport == Transport::kTcp) {
    for (std::uint32_t i = 0; i < n; ++i) {
      try {
        aggregator.attach(listener->accept(std::chrono::seconds(60)));
      } catch (const Error& e) {
        aggregator.abort(Error(ErrorCode::kCollaboratorDropped,
                               fmt::format("only {} of {} collaborators connected", i, n)));
        break;
      }
    }
  }

  std::optional<Error> failure;
  try {
    report.federation = aggregator.wait();
  } catch (const Error& e) {
    failure = e;
  }
  for (auto& t : threads) t.join();
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  // A collaborator's own error explains an aggregator-side drop better than the drop does.
  for (const auto& e : collab_errors) {
    if (e && e->code() != ErrorCode::kAggregatorGone) throw *e;
  }
  if (failure) throw *failure;
  for (const auto& e : collab_errors) {
    if (e) throw *e;
  }
  return report;
}

std::string report_jsonl(const RunReport& report) {
  std::string out;
  for (const auto& m : report.federation.metrics) {
    nlohmann::json j = {{"round", m.round}, {"metric", m.name}, {"value", m.value}};
    j["collaborator"] = m.collaborator ? nlohmann::json(*m.collaborator) : nlohmann::json("global");
    out += j.dump() + "\n";
  }
  nlohmann::json summary;
  const auto curve = report.f1_curve();
  summary["rounds"] = report.plan.federation.rounds;
  summary["collaborators"] = report.plan.federation.num_collaborators;
  summary["mode"] = std::string(to_string(report.plan.federation.mode));
  summary["learner"] = report.plan.federation.learner.family_id;
  summary["seed"] = report.plan.federation.seed;
  summary["train_size"] = report.train_size;
  summary["test_size"] = report.test_size;
  summary["num_classes"] = report.federation.num_classes;
  summary["ensemble_terms"] = report.federation.ensemble.size();
  summary["final_f1_macro"] = curve.empty() ? nlohmann::json() : nlohmann::json(curve.back());
  summary["wall_seconds"] = report.wall_seconds;
  std::vector<nlohmann::json> decisions;
  for (const auto& d : report.federation.decisions) {
    decisions.push_back({{"round", d.round}, {"best", d.best_index}, {"alpha", d.alpha},
                         {"error", d.global_error}});
  }
  summary["decisions"] = decisions;
  out += nlohmann::json{{"summary", summary}}.dump() + "\n";
  return out;
}

void write_report(const RunReport& report, const std::filesystem::path& out) {
  auto write = [](const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error(ErrorCode::kIoError, fmt::format("cannot write '{}'", p.string()));
    f << text;
  };
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
  write(out, report_jsonl(report));
  save_ensemble(report.federation.ensemble, out.string() + ".ensemble");
  write(out.string() + ".events.jsonl", protocol::to_jsonl(report.federation.events));
}

}  // namespace fedboost
