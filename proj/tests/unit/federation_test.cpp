#include <gtest/gtest.h>

#include <thread>

#include "fedboost/orchestrator/simulate.hpp"
#include "support.hpp"

namespace fedboost {
namespace {

using protocol::EventKind;
using testing::make_plan;

protocol::BarrierCheck check_for(const Plan& plan) {
  return {plan.federation.num_collaborators, plan.federation.rounds, plan.tasks,
          plan.federation.mode == FederationMode::kAdaBoostF};
}

std::size_t count(const std::vector<protocol::Event>& events, EventKind kind,
                  std::optional<CollaboratorId> who = std::nullopt) {
  return static_cast<std::size_t>(std::count_if(events.begin(), events.end(), [&](const auto& e) {
    return e.kind == kind && (!who || e.collaborator == who);
  }));
}

TEST(Federation, LoneCollaboratorNeverHolds) {
  auto plan = make_plan("stump", 1, 2, 1);
  auto r = simulate(plan, make_blobs(60, 2, 2, 1.0, 1));
  const auto& ev = r.federation.events;
  EXPECT_EQ(count(ev, EventKind::kHold), 0u);
  EXPECT_EQ(count(ev, EventKind::kProceed), count(ev, EventKind::kSynch));
  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (ev[i].kind == EventKind::kSynch) {
      auto next = std::find_if(ev.begin() + static_cast<std::ptrdiff_t>(i) + 1, ev.end(),
                               [](const auto& e) { return e.collaborator == 0u; });
      ASSERT_NE(next, ev.end());
      EXPECT_EQ(next->kind, EventKind::kProceed);
    }
  }
}

TEST(Federation, DelayedCollaboratorMakesPeersHold) {
  auto plan = make_plan("stump", 3, 1, 2);
  SimulateOptions opts;
  opts.before_task = [](CollaboratorId id, std::string_view task, std::uint32_t) {
    if (id == 2 && task == "train") std::this_thread::sleep_for(std::chrono::milliseconds(100));
  };
  auto r = simulate(plan, make_blobs(90, 2, 2, 1.0, 2), opts);
  const auto& ev = r.federation.events;
  for (CollaboratorId c : {0u, 1u}) {
    auto hold = std::find_if(ev.begin(), ev.end(), [&](const auto& e) {
      return e.kind == EventKind::kHold && e.collaborator == c && e.task == "train";
    });
    auto proceed = std::find_if(ev.begin(), ev.end(), [&](const auto& e) {
      return e.kind == EventKind::kProceed && e.collaborator == c && e.task == "train";
    });
    ASSERT_NE(hold, ev.end()) << "collaborator " << c;
    EXPECT_LT(hold->seq, proceed->seq);
    EXPECT_GE(r.collaborators[c].holds, 1u);
  }
  EXPECT_TRUE(protocol::check_barrier_invariants(ev, check_for(plan)).empty());
}

TEST(Federation, OneRoundTwoCollaborators) {
  auto plan = make_plan("stump", 2, 1, 3);
  auto r = simulate(plan, make_blobs(80, 2, 2, 1.0, 3));
  EXPECT_EQ(r.federation.ensemble.size(), 1u);
  EXPECT_EQ(count(r.federation.events, EventKind::kBarrierComplete), 4u);
  for (const auto& c : r.collaborators) EXPECT_EQ(c.ensemble.size(), 1u);
}

TEST(Federation, LoneCollaboratorMatchesSequentialOracle) {
  auto plan = make_plan("tree", 1, 10, 4, {{"max_leaves", 6}});
  auto data = make_blobs(200, 4, 3, 2.5, 4);
  auto r = simulate(plan, data);
  auto prepared = prepare_data(plan, data);
  auto oracle = sequential_adaboost(plan.federation.learner, prepared.parts[0], 10, plan.federation.seed);
  ASSERT_EQ(r.federation.ensemble.size(), 10u);
  for (std::size_t t = 0; t < 10; ++t) {
    EXPECT_EQ(r.federation.ensemble.term(t).envelope.payload, oracle.ensemble.term(t).envelope.payload);
    EXPECT_EQ(r.federation.ensemble.term(t).alpha, oracle.ensemble.term(t).alpha);
  }
  EXPECT_EQ(predict_strong(r.federation.ensemble, data.features),
            predict_strong(oracle.ensemble, data.features));
  // Every collaborator assembles the same global model.
  EXPECT_EQ(predict_strong(r.collaborators[0].ensemble, data.features),
            predict_strong(oracle.ensemble, data.features));
}

TEST(Federation, HundredRoundsEightCollaboratorsCounts) {
  auto plan = make_plan("stump", 8, 100, 5);
  auto r = simulate(plan, make_blobs(400, 3, 3, 1.5, 5));
  const auto& ev = r.federation.events;
  EXPECT_EQ(count(ev, EventKind::kDecision), 100u);
  EXPECT_EQ(count(ev, EventKind::kDecisionBroadcast), 800u);
  EXPECT_EQ(count(ev, EventKind::kErrorUpload), 800u);
  EXPECT_EQ(r.federation.decisions.size(), 100u);
  EXPECT_EQ(r.federation.ensemble.size(), 100u);
  EXPECT_EQ(r.f1_curve().size(), 100u);
  auto bad = protocol::check_barrier_invariants(ev, check_for(plan));
  EXPECT_TRUE(bad.empty()) << bad.front();
}

TEST(Federation, BaggingAppendsEveryHypothesis) {
  auto plan = make_plan("tree", 3, 4, 6);
  plan.tasks = bagging_tasks();
  plan.federation.mode = FederationMode::kBagging;
  auto r = simulate(plan, make_blobs(150, 3, 3, 1.5, 6));
  EXPECT_EQ(r.federation.ensemble.size(), 12u);
  EXPECT_TRUE(r.federation.decisions.empty());
  for (const auto& t : r.federation.ensemble.terms()) EXPECT_EQ(t.alpha, 1.0);
  EXPECT_TRUE(protocol::check_barrier_invariants(r.federation.events, check_for(plan)).empty());
}

TEST(Federation, OptionalValidationTasks) {
  auto plan = make_plan("gaussian_nb", 2, 2, 7);
  plan.tasks = {"aggregated_model_validation", "train", "weak_learners_validate", "adaboost_update",
                "adaboost_validate", "locally_tuned_model_validation"};
  auto r = simulate(plan, make_blobs(100, 3, 3, 1.5, 7));
  std::set<std::string> names;
  for (const auto& m : r.federation.metrics) names.insert(m.name);
  EXPECT_TRUE(names.contains("aggregated_f1"));
  EXPECT_TRUE(names.contains("local_f1"));
  EXPECT_TRUE(names.contains("f1_macro"));
  EXPECT_TRUE(protocol::check_barrier_invariants(r.federation.events, check_for(plan)).empty());
}

TEST(Federation, OverTcpLoopback) {
  auto plan = make_plan("tree", 3, 3, 8);
  plan.protocol.codec = protocol::EnvelopeCodec::kBaseline;
  SimulateOptions opts;
  opts.transport = Transport::kTcp;
  auto data = make_blobs(150, 3, 3, 1.5, 8);
  auto tcp = simulate(plan, data, opts);
  auto local = simulate(plan, data);
  EXPECT_EQ(tcp.federation.decisions, local.federation.decisions);
  EXPECT_EQ(tcp.f1_curve(), local.f1_curve());
}

TEST(Federation, StoreWindowBoundsBothSides) {
  auto plan = make_plan("stump", 2, 10, 9);
  plan.store = RetentionPolicy::last(2);
  auto r = simulate(plan, make_blobs(80, 2, 2, 1.0, 9));
  ASSERT_EQ(r.federation.store_trace.size(), 10u);
  for (const auto& p : r.federation.store_trace) EXPECT_LE(p.size, 2 * p.inserted);
  for (const auto& c : r.collaborators) EXPECT_LE(c.store_size, 2 * 3u);  // model, errors, metric per round
}

struct Client {
  protocol::ConnectionPtr conn;
  const protocol::WireOptions wire;
  void send(const protocol::Message& m) { protocol::send_frame(*conn, m, wire); }
  protocol::Message recv() { return protocol::recv_frame(*conn, wire); }
};

protocol::AggregatorConfig agg_config(std::uint32_t n) {
  auto plan = make_plan("stump", n, 2, 1);
  protocol::AggregatorConfig cfg;
  cfg.federation = plan.federation;
  cfg.tasks = plan.tasks;
  cfg.num_classes = 2;
  return cfg;
}

ErrorCode failure_of(protocol::Aggregator& agg) {
  try {
    agg.wait();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInvalidArgument;
}

TEST(Aggregator, DroppedCollaboratorFailsFast) {
  protocol::Aggregator agg(agg_config(2));
  auto [a_srv, a_cli] = protocol::make_pipe_pair();
  auto [b_srv, b_cli] = protocol::make_pipe_pair();
  agg.attach(std::move(a_srv));
  agg.attach(std::move(b_srv));
  Client a{std::move(a_cli), {}};
  a.send(protocol::Hello{0, 10, 2});
  EXPECT_TRUE(std::holds_alternative<protocol::Ack>(a.recv()));
  b_cli->close();
  EXPECT_EQ(failure_of(agg), ErrorCode::kCollaboratorDropped);
  // The survivor is told to stop.
  bool aborted = false;
  try {
    for (int i = 0; i < 4 && !aborted; ++i) aborted = std::holds_alternative<protocol::Abort>(a.recv());
  } catch (const Error&) {
    aborted = true;
  }
  EXPECT_TRUE(aborted);
}

TEST(Aggregator, DuplicateHelloIsRejected) {
  protocol::Aggregator agg(agg_config(2));
  auto [a_srv, a_cli] = protocol::make_pipe_pair();
  auto [b_srv, b_cli] = protocol::make_pipe_pair();
  agg.attach(std::move(a_srv));
  agg.attach(std::move(b_srv));
  Client a{std::move(a_cli), {}}, b{std::move(b_cli), {}};
  a.send(protocol::Hello{0, 10, 2});
  a.recv();
  b.send(protocol::Hello{0, 10, 2});
  EXPECT_EQ(failure_of(agg), ErrorCode::kDuplicateHello);
}

TEST(Aggregator, OutOfOrderMessageIsViolation) {
  protocol::Aggregator agg(agg_config(1));
  auto [srv, cli] = protocol::make_pipe_pair();
  agg.attach(std::move(srv));
  Client c{std::move(cli), {}};
  c.send(protocol::Synch{0, "train", 1});
  EXPECT_EQ(failure_of(agg), ErrorCode::kProtocolViolation);
}

TEST(Aggregator, WaitBeforeEveryoneSaidHello) {
  protocol::Aggregator agg(agg_config(2));
  auto [srv, cli] = protocol::make_pipe_pair();
  auto [srv2, cli2] = protocol::make_pipe_pair();
  agg.attach(std::move(srv));
  agg.attach(std::move(srv2));
  Client c{std::move(cli), {}};
  c.send(protocol::Hello{0, 10, 2});
  c.recv();
  c.send(protocol::TaskPoll{0, 0});
  EXPECT_TRUE(std::holds_alternative<protocol::Wait>(c.recv()));
  agg.abort(Error(ErrorCode::kCollaboratorDropped, "test over"));
  EXPECT_ANY_THROW(agg.wait());
  cli2->close();
}

TEST(Collaborator, AbortSurfacesAsAggregatorGone) {
  auto [srv, cli] = protocol::make_pipe_pair();
  std::thread fake([&] {
    const protocol::WireOptions wire;
    protocol::recv_frame(*srv, wire);
    protocol::send_frame(*srv, protocol::Abort{"no"}, wire);
  });
  protocol::CollaboratorConfig cfg;
  try {
    protocol::run_collaborator(*cli, make_blobs(10, 2, 2, 1.0, 1), cfg);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAggregatorGone);
  }
  fake.join();
}

}  // namespace
}  // namespace fedboost
