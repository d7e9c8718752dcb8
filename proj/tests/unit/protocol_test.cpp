#include <gtest/gtest.h>

#include <random>
#include <thread>

#include "fedboost/protocol/event_log.hpp"
#include "fedboost/protocol/transport.hpp"
#include "support.hpp"

namespace fedboost::protocol {
namespace {

class MessageGen {
 public:
  explicit MessageGen(std::uint64_t seed) : rng_(seed) {}

  Message next() {
    switch (pick(16)) {
      case 0: return Hello{u32(), rng_(), static_cast<std::uint16_t>(pick(1000))};
      case 1: {
        SpecBroadcast m{u32(), u32(), u32(), rng_(),
                        pick(2) ? FederationMode::kBagging : FederationMode::kAdaBoostF,
                        {word(), {}}};
        for (std::size_t i = pick(4); i > 0; --i) m.spec.hyperparameters[word()] = real();
        return m;
      }
      case 2: return TaskPoll{u32(), u32()};
      case 3: return TaskAssign{word(), u32()};
      case 4: return Wait{};
      case 5: return ModelUpload{u32(), envelope()};
      case 6: {
        HypothesisBroadcast m{u32(), {}};
        for (std::size_t i = pick(5); i > 0; --i) m.hypotheses.push_back(envelope());
        return m;
      }
      case 7: {
        ErrorUpload m;
        m.round = u32();
        m.report.round = u32();
        const auto bits = pick(70);
        for (std::size_t j = pick(5); j > 0; --j) {
          m.report.errors.push_back(static_cast<WideReal>(real()) / 3);
          Bitmap b(bits);
          for (std::size_t k = 0; k < bits; ++k) {
            if (pick(2)) b.set(k);
          }
          m.report.mispredictions.push_back(b);
        }
        m.report.weight_norm = static_cast<WideReal>(real()) * 7;
        return m;
      }
      case 8: {
        RoundDecision d{u32(), u32(), real(), real(), static_cast<WideReal>(real()) / 11};
        return DecisionBroadcast{u32(), d};
      }
      case 9: return Synch{u32(), word(), u32()};
      case 10: return Proceed{};
      case 11: return Hold{};
      case 12: return MetricUpload{u32(), word(), real()};
      case 13: return Bye{u32()};
      case 14: return Ack{};
      default: return Abort{word()};
    }
  }

 private:
  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(rng_()); }
  double real() { return std::normal_distribution<double>(0, 1e3)(rng_); }
  std::string word() {
    std::string s(pick(20), 'a');
    for (auto& c : s) c = static_cast<char>('a' + pick(26));
    return s;
  }
  WeakModelEnvelope envelope() {
    WeakModelEnvelope e{word(), u32(), {}, u32(), u32()};
    e.payload.resize(pick(300));
    for (auto& b : e.payload) b = static_cast<std::uint8_t>(rng_());
    return e;
  }

  std::mt19937_64 rng_;
};

TEST(Message, HelloBodyIs14Bytes) {
  Hello h{3, 1000, 2};
  auto bytes = encode_message(h, EnvelopeCodec::kCompact);
  ASSERT_EQ(bytes.size(), 15u);  // kind byte + body
  EXPECT_EQ(bytes[0], static_cast<std::uint8_t>(MessageKind::kHello));
  auto back = decode_message(bytes, EnvelopeCodec::kCompact);
  EXPECT_EQ(std::get<Hello>(back), h);
  EXPECT_EQ(encode_message(back, EnvelopeCodec::kCompact), bytes);
}

TEST(Message, RoundTripBothCodecs) {
  MessageGen gen(1);
  for (int i = 0; i < 2000; ++i) {
    auto m = gen.next();
    for (auto codec : {EnvelopeCodec::kCompact, EnvelopeCodec::kBaseline}) {
      auto back = decode_message(encode_message(m, codec), codec);
      ASSERT_EQ(back, m) << to_string(kind_of(m));
    }
  }
}

TEST(Message, MalformedBodies) {
  auto bytes = encode_message(TaskAssign{"train", 3}, EnvelopeCodec::kCompact);
  auto expect_malformed = [](const Bytes& b) {
    try {
      decode_message(b, EnvelopeCodec::kCompact);
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kMalformedFrame);
    }
  };
  auto shorter = bytes;
  shorter.pop_back();
  expect_malformed(shorter);
  auto longer = bytes;
  longer.push_back(0);
  expect_malformed(longer);
  auto unknown = bytes;
  unknown[0] = 99;
  expect_malformed(unknown);
}

TEST(Frame, TooLargeIsRejectedBeforeWriting) {
  auto [a, b] = make_pipe_pair();
  WireOptions small{64, EnvelopeCodec::kCompact};
  Bytes body(64, 0);
  body[0] = static_cast<std::uint8_t>(MessageKind::kAck);
  EXPECT_NO_THROW(send_raw_frame(*a, body, small));
  EXPECT_EQ(recv_raw_frame(*b, small).size(), 64u);
  body.push_back(0);  // max_frame_size + 1
  try {
    send_raw_frame(*a, body, small);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFrameTooLarge);
  }
  // Receiver enforces its own limit too.
  send_raw_frame(*a, body, WireOptions{});
  try {
    recv_raw_frame(*b, small);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFrameTooLarge);
  }
}

TEST(Frame, ZeroLengthAndClosedPipe) {
  auto [a, b] = make_pipe_pair();
  const std::uint8_t zero[4] = {0, 0, 0, 0};
  a->write_all(zero);
  EXPECT_ANY_THROW(recv_raw_frame(*b, WireOptions{}));
  a->close();
  try {
    recv_frame(*b, WireOptions{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConnectionClosed);
  }
}

TEST(Frame, EchoTenThousandMessagesOverPipe) {
  auto [a, b] = make_pipe_pair();
  const WireOptions opts;
  std::vector<Message> sent;
  MessageGen gen(77);
  for (int i = 0; i < 10000; ++i) sent.push_back(gen.next());
  std::thread writer([&] {
    for (const auto& m : sent) send_frame(*a, m, opts);
  });
  std::vector<Message> got;
  for (std::size_t i = 0; i < sent.size(); ++i) got.push_back(recv_frame(*b, opts));
  writer.join();
  EXPECT_EQ(got, sent);
}

TEST(Frame, EchoOverTcp) {
  TcpListener listener({"127.0.0.1", 0});
  const WireOptions opts{kDefaultMaxFrameSize, EnvelopeCodec::kBaseline};
  std::vector<Message> sent;
  MessageGen gen(78);
  for (int i = 0; i < 1000; ++i) sent.push_back(gen.next());
  std::thread client([&] {
    auto conn = tcp_connect({"127.0.0.1", listener.port()});
    for (const auto& m : sent) send_frame(*conn, m, opts);
  });
  auto server = listener.accept(std::chrono::seconds(10));
  std::vector<Message> got;
  for (std::size_t i = 0; i < sent.size(); ++i) got.push_back(recv_frame(*server, opts));
  client.join();
  EXPECT_EQ(got, sent);
}

TEST(Endpoint, Parsing) {
  auto e = parse_endpoint("127.0.0.1:5050");
  EXPECT_EQ(e.host, "127.0.0.1");
  EXPECT_EQ(e.port, 5050);
  EXPECT_EQ(parse_endpoint(":80").host, "0.0.0.0");
  EXPECT_ANY_THROW(parse_endpoint("nohost"));
  EXPECT_ANY_THROW(parse_endpoint("a:99999"));
}

// Hand-built logs for the barrier checker.
struct LogBuilder {
  std::vector<Event> events;
  void add(EventKind k, std::optional<CollaboratorId> c, std::string task, std::uint32_t round) {
    events.push_back({events.size(), 0.0, k, c, std::move(task), round});
  }
  // One clean step of `task` for collaborators 0..n-1.
  void step(std::uint32_t n, const std::string& task, std::uint32_t round, bool decision = false) {
    for (CollaboratorId c = 0; c < n; ++c) add(EventKind::kTaskAssign, c, task, round);
    if (auto up = upload_for_task(task)) {
      for (CollaboratorId c = 0; c < n; ++c) add(*up, c, task, round);
    }
    for (CollaboratorId c = 0; c < n; ++c) add(EventKind::kSynch, c, task, round);
    add(EventKind::kBarrierComplete, std::nullopt, task, round);
    if (decision) add(EventKind::kDecision, std::nullopt, task, round);
    for (CollaboratorId c = 0; c < n; ++c) add(EventKind::kProceed, c, task, round);
  }
};

BarrierCheck expect_for(std::uint32_t n, std::uint32_t rounds) {
  return {n, rounds, {"train", "weak_learners_validate", "adaboost_update", "adaboost_validate"}, true};
}

LogBuilder clean_log(std::uint32_t n, std::uint32_t rounds) {
  LogBuilder b;
  for (CollaboratorId c = 0; c < n; ++c) b.add(EventKind::kHello, c, "", 0);
  for (std::uint32_t r = 1; r <= rounds; ++r) {
    b.step(n, "train", r);
    b.step(n, "weak_learners_validate", r, true);
    b.step(n, "adaboost_update", r);
    b.step(n, "adaboost_validate", r);
  }
  return b;
}

TEST(Invariants, CleanLogPasses) {
  auto b = clean_log(3, 2);
  EXPECT_TRUE(check_barrier_invariants(b.events, expect_for(3, 2)).empty());
}

TEST(Invariants, EarlyProceedIsCaught) {
  auto b = clean_log(2, 1);
  // Move the first PROCEED before the last SYNCH of the first step.
  auto first_proceed = std::find_if(b.events.begin(), b.events.end(),
                                    [](const Event& e) { return e.kind == EventKind::kProceed; });
  auto last_synch = std::find_if(b.events.begin(), b.events.end(), [](const Event& e) {
    return e.kind == EventKind::kSynch && e.collaborator == 1u;
  });
  std::iter_swap(first_proceed, last_synch);
  EXPECT_FALSE(check_barrier_invariants(b.events, expect_for(2, 1)).empty());
}

TEST(Invariants, MissingUploadAndDecisionAreCaught) {
  auto b = clean_log(2, 1);
  auto up = std::find_if(b.events.begin(), b.events.end(),
                         [](const Event& e) { return e.kind == EventKind::kErrorUpload; });
  b.events.erase(up);
  EXPECT_FALSE(check_barrier_invariants(b.events, expect_for(2, 1)).empty());

  auto c = clean_log(2, 1);
  auto d = std::find_if(c.events.begin(), c.events.end(),
                        [](const Event& e) { return e.kind == EventKind::kDecision; });
  c.events.erase(d);
  EXPECT_FALSE(check_barrier_invariants(c.events, expect_for(2, 1)).empty());
}

TEST(Invariants, AssignBeforeBarrierAndRegressionAreCaught) {
  LogBuilder b;
  for (CollaboratorId c = 0; c < 2; ++c) b.add(EventKind::kHello, c, "", 0);
  b.add(EventKind::kTaskAssign, 0u, "train", 1);
  b.add(EventKind::kModelUpload, 0u, "train", 1);
  b.add(EventKind::kSynch, 0u, "train", 1);
  b.add(EventKind::kTaskAssign, 0u, "weak_learners_validate", 1);
  EXPECT_FALSE(check_barrier_invariants(b.events, expect_for(2, 1)).empty());

  auto r = clean_log(1, 2);
  r.add(EventKind::kTaskAssign, 0u, "train", 1);
  EXPECT_FALSE(check_barrier_invariants(r.events, expect_for(1, 2)).empty());
}

TEST(EventLog, RecordsInOrderAndSerializes) {
  EventLog log;
  log.record(EventKind::kHello, 0u, "", 0);
  log.record(EventKind::kBarrierComplete, std::nullopt, "train", 1);
  auto ev = log.events();
  ASSERT_EQ(ev.size(), 2u);
  EXPECT_EQ(ev[1].seq, 1u);
  EXPECT_EQ(log.count(EventKind::kHello), 1u);
  auto text = log.to_jsonl();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  EXPECT_NE(text.find("train"), std::string::npos);
}

}  // namespace
}  // namespace fedboost::protocol
