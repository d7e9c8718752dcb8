#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fedboost/core.hpp"
#include "fedboost/protocol/transport.hpp"
#include "fedboost/store.hpp"

namespace fedboost {

struct ProtocolSettings {
  std::size_t max_frame_size = protocol::kDefaultMaxFrameSize;
  double poll_interval = 0.01;  // seconds between SYNCH polls
  double wait_interval = 0.01;  // seconds slept after a WAIT
  protocol::EnvelopeCodec codec = protocol::EnvelopeCodec::kCompact;

  friend bool operator==(const ProtocolSettings&, const ProtocolSettings&) = default;
};

struct DataSettings {
  std::string path;
  std::string split = "iid";
  std::uint64_t seed = 0;
  double test_fraction = 0.2;
  /// Fixed label vocabulary; empty means "every label in the file, sorted".
  std::vector<std::string> labels;

  friend bool operator==(const DataSettings&, const DataSettings&) = default;
};

struct Plan {
  FederationConfig federation;
  std::vector<std::string> tasks;
  ProtocolSettings protocol;
  RetentionPolicy store;
  DataSettings data;

  friend bool operator==(const Plan&, const Plan&) = default;
};

/// Every task name a plan may use.
const std::vector<std::string>& known_tasks();
std::vector<std::string> adaboost_tasks();
std::vector<std::string> bagging_tasks();

/// Checks the task list and returns the mode it implies. Throws BadTaskOrder.
FederationMode infer_mode(const std::vector<std::string>& tasks);

/// Throws UnknownKey(path), MissingField, BadTaskOrder, BadValue, UnknownFamily.
Plan parse_plan(std::string_view yaml);
Plan load_plan(const std::filesystem::path& path);
std::string render_plan(const Plan& plan);

/// Plan-level checks shared by every entry point.
void validate_plan(const Plan& plan);

protocol::WireOptions wire_options(const Plan& plan);

}  // namespace fedboost
