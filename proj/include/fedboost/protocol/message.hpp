#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fedboost/core.hpp"

namespace fedboost::protocol {

inline constexpr std::uint16_t kProtocolVersion = 1;

enum class MessageKind : std::uint8_t {
  kHello = 1,
  kSpecBroadcast = 2,
  kTaskPoll = 3,
  kTaskAssign = 4,
  kWait = 5,
  kModelUpload = 6,
  kHypothesisBroadcast = 7,
  kErrorUpload = 8,
  kDecisionBroadcast = 9,
  kSynch = 10,
  kProceed = 11,
  kHold = 12,
  kMetricUpload = 13,
  kBye = 14,
  kAck = 15,
  kAbort = 16,
};

std::string_view to_string(MessageKind kind);

// Uplink: collaborator -> aggregator. Downlink: aggregator -> collaborator.

struct Hello {  // uplink, answered by Ack
  CollaboratorId collab_id = 0;
  std::uint64_t shard_size = 0;
  std::uint16_t num_classes = 0;
  friend bool operator==(const Hello&, const Hello&) = default;
};
// Precedes the first TaskAssign a collaborator receives.
struct SpecBroadcast {
  std::uint32_t round = 0;
  std::uint32_t num_classes = 0;
  std::uint32_t rounds = 0;
  std::uint64_t seed = 0;
  FederationMode mode = FederationMode::kAdaBoostF;
  LearnerSpec spec;
  friend bool operator==(const SpecBroadcast&, const SpecBroadcast&) = default;
};
struct TaskPoll {  // uplink, answered by TaskAssign (maybe preceded by a broadcast), Wait or Bye
  CollaboratorId collab_id = 0;
  std::uint32_t round = 0;
  friend bool operator==(const TaskPoll&, const TaskPoll&) = default;
};
struct TaskAssign {
  std::string task;
  std::uint32_t round = 0;
  friend bool operator==(const TaskAssign&, const TaskAssign&) = default;
};
struct Wait {
  friend bool operator==(const Wait&, const Wait&) = default;
};
struct ModelUpload {  // uplink, answered by Ack
  std::uint32_t round = 0;
  WeakModelEnvelope envelope;
  friend bool operator==(const ModelUpload&, const ModelUpload&) = default;
};
struct HypothesisBroadcast {
  std::uint32_t round = 0;
  std::vector<WeakModelEnvelope> hypotheses;  // ordered by collaborator id
  friend bool operator==(const HypothesisBroadcast&, const HypothesisBroadcast&) = default;
};
struct ErrorUpload {  // uplink, answered by Ack
  std::uint32_t round = 0;
  ErrorReport report;
  friend bool operator==(const ErrorUpload& a, const ErrorUpload& b) {
    return a.round == b.round && a.report.round == b.report.round &&
           a.report.errors == b.report.errors && a.report.weight_norm == b.report.weight_norm &&
           a.report.mispredictions == b.report.mispredictions;
  }
};
struct DecisionBroadcast {
  std::uint32_t round = 0;
  RoundDecision decision;
  friend bool operator==(const DecisionBroadcast&, const DecisionBroadcast&) = default;
};
struct Synch {  // uplink, answered by Proceed or Hold
  CollaboratorId collab_id = 0;
  std::string task;
  std::uint32_t round = 0;
  friend bool operator==(const Synch&, const Synch&) = default;
};
struct Proceed {
  friend bool operator==(const Proceed&, const Proceed&) = default;
};
struct Hold {
  friend bool operator==(const Hold&, const Hold&) = default;
};
struct MetricUpload {  // uplink, answered by Ack
  std::uint32_t round = 0;
  std::string name;
  double value = 0.0;
  friend bool operator==(const MetricUpload&, const MetricUpload&) = default;
};
struct Bye {  // uplink (answered by Ack) and downlink (federation finished)
  CollaboratorId collab_id = 0;
  friend bool operator==(const Bye&, const Bye&) = default;
};
struct Ack {
  friend bool operator==(const Ack&, const Ack&) = default;
};
struct Abort {  // downlink: the federation failed
  std::string reason;
  friend bool operator==(const Abort&, const Abort&) = default;
};

using Message = std::variant<Hello, SpecBroadcast, TaskPoll, TaskAssign, Wait, ModelUpload,
                             HypothesisBroadcast, ErrorUpload, DecisionBroadcast, Synch, Proceed,
                             Hold, MetricUpload, Bye, Ack, Abort>;

MessageKind kind_of(const Message& msg);

// How weak-model envelopes are laid out inside messages.
//  compact:  [origin: u32][round: u32][canonical envelope]
//  baseline: JSON text {family, version, origin, round, payload (hex)}
enum class EnvelopeCodec : std::uint8_t { kCompact = 0, kBaseline = 1 };
std::string_view to_string(EnvelopeCodec codec);
EnvelopeCodec parse_codec(std::string_view s);

void write_wire_envelope(ByteWriter& w, const WeakModelEnvelope& env, EnvelopeCodec codec);
WeakModelEnvelope read_wire_envelope(ByteReader& r, EnvelopeCodec codec);

/// Kind byte + body. Throws MalformedFrame on anything that does not decode.
Bytes encode_message(const Message& msg, EnvelopeCodec codec);
Message decode_message(std::span<const std::uint8_t> kind_and_body, EnvelopeCodec codec);

}  // namespace fedboost::protocol
