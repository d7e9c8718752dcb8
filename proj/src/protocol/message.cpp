#include "fedboost/protocol/message.hpp"

#include <nlohmann/json.hpp>
#include <fmt/format.h>

namespace fedboost::protocol {

std::string_view to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::kHello: return "HELLO";
    case MessageKind::kSpecBroadcast: return "SPEC_BROADCAST";
    case MessageKind::kTaskPoll: return "TASK_POLL";
    case MessageKind::kTaskAssign: return "TASK_ASSIGN";
    case MessageKind::kWait: return "WAIT";
    case MessageKind::kModelUpload: return "MODEL_UPLOAD";
    case MessageKind::kHypothesisBroadcast: return "HYPOTHESIS_BROADCAST";
    case MessageKind::kErrorUpload: return "ERROR_UPLOAD";
    case MessageKind::kDecisionBroadcast: return "DECISION_BROADCAST";
    case MessageKind::kSynch: return "SYNCH";
    case MessageKind::kProceed: return "PROCEED";
    case MessageKind::kHold: return "HOLD";
    case MessageKind::kMetricUpload: return "METRIC_UPLOAD";
    case MessageKind::kBye: return "BYE";
    case MessageKind::kAck: return "ACK";
    case MessageKind::kAbort: return "ABORT";
  }
  return "UNKNOWN";
}

MessageKind kind_of(const Message& msg) {
  // Variant alternatives are declared in tag order starting at 1.
  return static_cast<MessageKind>(msg.index() + 1);
}

std::string_view to_string(EnvelopeCodec codec) {
  return codec == EnvelopeCodec::kCompact ? "compact" : "baseline";
}

EnvelopeCodec parse_codec(std::string_view s) {
  if (s == "compact") return EnvelopeCodec::kCompact;
  if (s == "baseline") return EnvelopeCodec::kBaseline;
  throw Error(ErrorCode::kBadValue, fmt::format("unknown codec '{}'", s));
}

namespace {

constexpr char kHex[] = "0123456789abcdef";

std::string to_hex(std::span<const std::uint8_t> bytes) {
  std::string s;
  s.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    s.push_back(kHex[b >> 4]);
    s.push_back(kHex[b & 0xF]);
  }
  return s;
}

Bytes from_hex(std::string_view s) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
  };
  if (s.size() % 2) throw Error(ErrorCode::kMalformedFrame, "odd-length hex payload");
  Bytes out(s.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = nibble(s[2 * i]), lo = nibble(s[2 * i + 1]);
    if (hi < 0 || lo < 0) throw Error(ErrorCode::kMalformedFrame, "bad hex digit in payload");
    out[i] = static_cast<std::uint8_t>(hi << 4 | lo);
  }
  return out;
}

}  // namespace

void write_wire_envelope(ByteWriter& w, const WeakModelEnvelope& env, EnvelopeCodec codec) {
  if (codec == EnvelopeCodec::kCompact) {
    w.u32(env.origin_id);
    w.u32(env.round);
    write_envelope(w, env);
    return;
  }
  nlohmann::json j = {{"family", env.family_id},
                      {"version", env.format_version},
                      {"origin", env.origin_id},
                      {"round", env.round},
                      {"payload", to_hex(env.payload)}};
  auto text = j.dump();
  w.blob({reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

WeakModelEnvelope read_wire_envelope(ByteReader& r, EnvelopeCodec codec) {
  if (codec == EnvelopeCodec::kCompact) {
    auto origin = r.u32();
    auto round = r.u32();
    auto env = read_envelope(r);
    env.origin_id = origin;
    env.round = round;
    return env;
  }
  auto text = r.blob();
  try {
    auto j = nlohmann::json::parse(text.begin(), text.end());
    WeakModelEnvelope env;
    env.family_id = j.at("family").get<std::string>();
    env.format_version = j.at("version").get<std::uint32_t>();
    env.origin_id = j.at("origin").get<std::uint32_t>();
    env.round = j.at("round").get<std::uint32_t>();
    env.payload = from_hex(j.at("payload").get<std::string>());
    return env;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedFrame, fmt::format("baseline envelope: {}", e.what()));
  }
}

namespace {

struct BodyWriter {
  ByteWriter& w;
  EnvelopeCodec codec;

  void operator()(const Hello& m) {
    w.u32(m.collab_id);
    w.u64(m.shard_size);
    w.u16(m.num_classes);
  }
  void operator()(const SpecBroadcast& m) {
    w.u32(m.round);
    w.u32(m.num_classes);
    w.u32(m.rounds);
    w.u64(m.seed);
    w.u8(static_cast<std::uint8_t>(m.mode));
    w.str8(m.spec.family_id);
    if (m.spec.hyperparameters.size() > 0xFF) {
      throw Error(ErrorCode::kInvalidArgument, "too many hyperparameters");
    }
    w.u8(static_cast<std::uint8_t>(m.spec.hyperparameters.size()));
    for (const auto& [name, value] : m.spec.hyperparameters) {
      w.str8(name);
      w.f64(value);
    }
  }
  void operator()(const TaskPoll& m) {
    w.u32(m.collab_id);
    w.u32(m.round);
  }
  void operator()(const TaskAssign& m) {
    w.str8(m.task);
    w.u32(m.round);
  }
  void operator()(const Wait&) {}
  void operator()(const ModelUpload& m) {
    w.u32(m.round);
    write_wire_envelope(w, m.envelope, codec);
  }
  void operator()(const HypothesisBroadcast& m) {
    w.u32(m.round);
    w.u32(static_cast<std::uint32_t>(m.hypotheses.size()));
    for (const auto& h : m.hypotheses) write_wire_envelope(w, h, codec);
  }
  void operator()(const ErrorUpload& m) {
    const auto& r = m.report;
    if (r.mispredictions.size() != r.errors.size()) {
      throw Error(ErrorCode::kInvalidArgument, "error report with mismatched bitmap count");
    }
    w.u32(m.round);
    w.u32(r.round);
    w.u32(static_cast<std::uint32_t>(r.errors.size()));
    for (auto e : r.errors) w.f128(e);
    w.f128(r.weight_norm);
    const std::uint64_t bits = r.mispredictions.empty() ? 0 : r.mispredictions.front().size();
    w.u64(bits);
    for (const auto& b : r.mispredictions) {
      if (b.size() != bits) throw Error(ErrorCode::kInvalidArgument, "bitmaps of unequal length");
      w.bytes(b.packed());
    }
  }
  void operator()(const DecisionBroadcast& m) {
    w.u32(m.round);
    w.u32(m.decision.round);
    w.u32(m.decision.best_index);
    w.f64(m.decision.alpha);
    w.f64(m.decision.global_error);
    w.f128(m.decision.global_norm);
  }
  void operator()(const Synch& m) {
    w.u32(m.collab_id);
    w.str8(m.task);
    w.u32(m.round);
  }
  void operator()(const Proceed&) {}
  void operator()(const Hold&) {}
  void operator()(const MetricUpload& m) {
    w.u32(m.round);
    w.str8(m.name);
    w.f64(m.value);
  }
  void operator()(const Bye& m) { w.u32(m.collab_id); }
  void operator()(const Ack&) {}
  void operator()(const Abort& m) { w.str8(m.reason.substr(0, 0xFF)); }
};

Message read_body(MessageKind kind, ByteReader& r, EnvelopeCodec codec) {
  switch (kind) {
    case MessageKind::kHello: {
      Hello m;
      m.collab_id = r.u32();
      m.shard_size = r.u64();
      m.num_classes = r.u16();
      return m;
    }
    case MessageKind::kSpecBroadcast: {
      SpecBroadcast m;
      m.round = r.u32();
      m.num_classes = r.u32();
      m.rounds = r.u32();
      m.seed = r.u64();
      auto mode = r.u8();
      if (mode > static_cast<std::uint8_t>(FederationMode::kBagging)) {
        throw Error(ErrorCode::kMalformedFrame, fmt::format("unknown mode {}", mode));
      }
      m.mode = static_cast<FederationMode>(mode);
      m.spec.family_id = r.str8();
      auto count = r.u8();
      for (int i = 0; i < count; ++i) {
        auto name = r.str8();
        m.spec.hyperparameters[name] = r.f64();
      }
      return m;
    }
    case MessageKind::kTaskPoll: {
      TaskPoll m;
      m.collab_id = r.u32();
      m.round = r.u32();
      return m;
    }
    case MessageKind::kTaskAssign: {
      TaskAssign m;
      m.task = r.str8();
      m.round = r.u32();
      return m;
    }
    case MessageKind::kWait: return Wait{};
    case MessageKind::kModelUpload: {
      ModelUpload m;
      m.round = r.u32();
      m.envelope = read_wire_envelope(r, codec);
      return m;
    }
    case MessageKind::kHypothesisBroadcast: {
      HypothesisBroadcast m;
      m.round = r.u32();
      auto count = r.u32();
      if (count > r.remaining()) throw Error(ErrorCode::kMalformedFrame, "hypothesis count");
      for (std::uint32_t i = 0; i < count; ++i) m.hypotheses.push_back(read_wire_envelope(r, codec));
      return m;
    }
    case MessageKind::kErrorUpload: {
      ErrorUpload m;
      m.round = r.u32();
      m.report.round = r.u32();
      auto count = r.u32();
      if (static_cast<std::uint64_t>(count) * 16 > r.remaining()) {
        throw Error(ErrorCode::kMalformedFrame, "error count exceeds frame");
      }
      for (std::uint32_t i = 0; i < count; ++i) m.report.errors.push_back(r.f128());
      m.report.weight_norm = r.f128();
      auto bits = r.u64();
      const std::uint64_t bytes_per = (bits + 7) / 8;
      if (bytes_per * count != r.remaining()) {
        throw Error(ErrorCode::kMalformedFrame, "bitmap section has the wrong size");
      }
      for (std::uint32_t i = 0; i < count; ++i) {
        auto packed = r.take(static_cast<std::size_t>(bytes_per));
        m.report.mispredictions.emplace_back(static_cast<std::size_t>(bits),
                                             Bytes(packed.begin(), packed.end()));
      }
      return m;
    }
    case MessageKind::kDecisionBroadcast: {
      DecisionBroadcast m;
      m.round = r.u32();
      m.decision.round = r.u32();
      m.decision.best_index = r.u32();
      m.decision.alpha = r.f64();
      m.decision.global_error = r.f64();
      m.decision.global_norm = r.f128();
      return m;
    }
    case MessageKind::kSynch: {
      Synch m;
      m.collab_id = r.u32();
      m.task = r.str8();
      m.round = r.u32();
      return m;
    }
    case MessageKind::kProceed: return Proceed{};
    case MessageKind::kHold: return Hold{};
    case MessageKind::kMetricUpload: {
      MetricUpload m;
      m.round = r.u32();
      m.name = r.str8();
      m.value = r.f64();
      return m;
    }
    case MessageKind::kBye: return Bye{r.u32()};
    case MessageKind::kAck: return Ack{};
    case MessageKind::kAbort: return Abort{r.str8()};
  }
  throw Error(ErrorCode::kMalformedFrame,
              fmt::format("unknown message tag {}", static_cast<int>(kind)));
}

}  // namespace

Bytes encode_message(const Message& msg, EnvelopeCodec codec) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(kind_of(msg)));
  std::visit(BodyWriter{w, codec}, msg);
  return std::move(w).take();
}

Message decode_message(std::span<const std::uint8_t> kind_and_body, EnvelopeCodec codec) {
  ByteReader r(kind_and_body, ErrorCode::kMalformedFrame);
  const auto tag = r.u8();
  if (tag < static_cast<std::uint8_t>(MessageKind::kHello) ||
      tag > static_cast<std::uint8_t>(MessageKind::kAbort)) {
    throw Error(ErrorCode::kMalformedFrame, fmt::format("unknown message tag {}", tag),
                {.row = tag});
  }
  try {
    auto msg = read_body(static_cast<MessageKind>(tag), r, codec);
    r.expect_done(fmt::format("{} body", to_string(static_cast<MessageKind>(tag))));
    return msg;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kMalformedFrame) throw;
    throw Error(ErrorCode::kMalformedFrame,
                fmt::format("tag {}: {}", to_string(static_cast<MessageKind>(tag)), e.what()),
                {.row = tag});
  }
}

}  // namespace fedboost::protocol
