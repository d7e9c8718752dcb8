#include "fedboost/orchestrator/plan.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>
#include <yaml-cpp/yaml.h>

#include "fedboost/learners.hpp"

namespace fedboost {

const std::vector<std::string>& known_tasks() {
  static const std::vector<std::string> tasks = {
      "train",           "weak_learners_validate",      "adaboost_update",
      "adaboost_validate", "aggregated_model_validation", "locally_tuned_model_validation"};
  return tasks;
}

std::vector<std::string> adaboost_tasks() {
  return {"train", "weak_learners_validate", "adaboost_update", "adaboost_validate"};
}

std::vector<std::string> bagging_tasks() {
  return {"train", "weak_learners_validate", "adaboost_validate"};
}

FederationMode infer_mode(const std::vector<std::string>& tasks) {
  if (tasks.empty()) throw Error(ErrorCode::kBadTaskOrder, "task list is empty");
  std::set<std::string> seen;
  for (const auto& t : tasks) {
    if (std::find(known_tasks().begin(), known_tasks().end(), t) == known_tasks().end()) {
      throw Error(ErrorCode::kBadTaskOrder, fmt::format("unknown task '{}'", t));
    }
    if (!seen.insert(t).second) {
      throw Error(ErrorCode::kBadTaskOrder, fmt::format("task '{}' listed twice", t));
    }
  }
  const bool boosting = seen.contains("adaboost_update");
  const auto core = boosting ? adaboost_tasks() : bagging_tasks();
  std::vector<std::string> order;
  for (const auto& t : tasks) {
    if (std::find(core.begin(), core.end(), t) != core.end()) order.push_back(t);
  }
  if (order != core) {
    throw Error(ErrorCode::kBadTaskOrder,
                fmt::format("tasks must include [{}] in this order, got [{}]",
                            fmt::join(core, ", "), fmt::join(tasks, ", ")));
  }
  return boosting ? FederationMode::kAdaBoostF : FederationMode::kBagging;
}

namespace {

std::string join_path(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void reject_unknown(const YAML::Node& node, const std::string& path,
                    std::initializer_list<std::string_view> allowed) {
  if (!node.IsMap()) {
    throw Error(ErrorCode::kBadValue, fmt::format("'{}' must be a mapping", path.empty() ? "plan" : path));
  }
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw Error(ErrorCode::kUnknownKey, fmt::format("unknown key '{}'", join_path(path, key)));
    }
  }
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& path) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw Error(ErrorCode::kBadValue, fmt::format("'{}' has an invalid value", path));
  }
}

template <typename T>
T required(const YAML::Node& parent, const std::string& prefix, const std::string& key) {
  auto node = parent[key];
  if (!node) throw Error(ErrorCode::kMissingField, fmt::format("missing '{}'", join_path(prefix, key)));
  return scalar<T>(node, join_path(prefix, key));
}

template <typename T>
T optional_field(const YAML::Node& parent, const std::string& prefix, const std::string& key,
                 T fallback) {
  auto node = parent[key];
  if (!node) {
    spdlog::info("plan: {} defaults to {}", join_path(prefix, key), fmt::format("{}", fallback));
    return fallback;
  }
  return scalar<T>(node, join_path(prefix, key));
}

void require_section(const YAML::Node& root, const char* name) {
  if (!root[name]) throw Error(ErrorCode::kMissingField, fmt::format("missing '{}'", name));
}

}  // namespace

void validate_plan(const Plan& plan) {
  const auto mode = infer_mode(plan.tasks);
  if (mode != plan.federation.mode) {
    throw Error(ErrorCode::kBadTaskOrder,
                fmt::format("mode {} does not match the task list (implies {})",
                            to_string(plan.federation.mode), to_string(mode)));
  }
  validate_config(plan.federation);
  const auto& p = plan.protocol;
  if (p.max_frame_size < 64) throw Error(ErrorCode::kBadValue, "protocol.max_frame_size < 64");
  if (!(p.poll_interval >= 0) || !std::isfinite(p.poll_interval)) {
    throw Error(ErrorCode::kBadValue, "protocol.poll_interval must be >= 0");
  }
  if (!(p.wait_interval >= 0) || !std::isfinite(p.wait_interval)) {
    throw Error(ErrorCode::kBadValue, "protocol.wait_interval must be >= 0");
  }
  if (plan.store.window && *plan.store.window < 1) {
    throw Error(ErrorCode::kBadValue, "store.retention must be >= 1 or 'unbounded'");
  }
  if (plan.data.split != "iid") {
    throw Error(ErrorCode::kBadValue, fmt::format("data.split '{}' (only iid)", plan.data.split));
  }
  if (!(plan.data.test_fraction >= 0 && plan.data.test_fraction < 1)) {
    throw Error(ErrorCode::kBadValue, "data.test_fraction must be in [0, 1)");
  }
}

Plan parse_plan(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::kBadValue, fmt::format("plan is not valid YAML: {}", e.what()));
  }
  if (!root || root.IsNull()) throw Error(ErrorCode::kMissingField, "plan is empty");
  reject_unknown(root, "", {"federation", "tasks", "protocol", "store", "data"});

  Plan plan;
  require_section(root, "federation");
  const auto fed = root["federation"];
  reject_unknown(fed, "federation", {"collaborators", "rounds", "seed", "mode", "learner"});
  plan.federation.num_collaborators = required<std::uint32_t>(fed, "federation", "collaborators");
  plan.federation.rounds = required<std::uint32_t>(fed, "federation", "rounds");
  plan.federation.seed = optional_field<std::uint64_t>(fed, "federation", "seed", 0);

  if (!fed["learner"]) throw Error(ErrorCode::kMissingField, "missing 'federation.learner'");
  const auto learner = fed["learner"];
  reject_unknown(learner, "federation.learner", {"family", "hyperparameters"});
  plan.federation.learner.family_id = required<std::string>(learner, "federation.learner", "family");
  if (auto hp = learner["hyperparameters"]) {
    if (!hp.IsMap() && !hp.IsNull()) {
      throw Error(ErrorCode::kBadValue, "'federation.learner.hyperparameters' must be a mapping");
    }
    for (const auto& kv : hp) {
      const auto name = kv.first.as<std::string>();
      plan.federation.learner.hyperparameters[name] =
          scalar<double>(kv.second, "federation.learner.hyperparameters." + name);
    }
  }

  if (!root["tasks"]) throw Error(ErrorCode::kMissingField, "missing 'tasks'");
  if (!root["tasks"].IsSequence()) throw Error(ErrorCode::kBadValue, "'tasks' must be a list");
  for (const auto& t : root["tasks"]) plan.tasks.push_back(scalar<std::string>(t, "tasks"));
  const auto inferred = infer_mode(plan.tasks);
  if (auto m = fed["mode"]) {
    try {
      plan.federation.mode = parse_mode(scalar<std::string>(m, "federation.mode"));
    } catch (const Error& e) {
      throw Error(ErrorCode::kBadValue, e.what());
    }
  } else {
    plan.federation.mode = inferred;
    spdlog::info("plan: federation.mode inferred as {}", to_string(inferred));
  }

  YAML::Node empty(YAML::NodeType::Map);
  const auto proto = root["protocol"] ? root["protocol"] : empty;
  reject_unknown(proto, "protocol", {"max_frame_size", "poll_interval", "wait_interval", "codec"});
  plan.protocol.max_frame_size = optional_field<std::size_t>(
      proto, "protocol", "max_frame_size", protocol::kDefaultMaxFrameSize);
  plan.protocol.poll_interval = optional_field<double>(proto, "protocol", "poll_interval", 0.01);
  plan.protocol.wait_interval = optional_field<double>(proto, "protocol", "wait_interval", 0.01);
  plan.protocol.codec =
      protocol::parse_codec(optional_field<std::string>(proto, "protocol", "codec", "compact"));

  const auto store = root["store"] ? root["store"] : empty;
  reject_unknown(store, "store", {"retention"});
  if (auto r = store["retention"]) {
    if (r.IsScalar() && r.as<std::string>() == "unbounded") {
      plan.store = RetentionPolicy::unbounded();
    } else {
      auto w = scalar<std::int64_t>(r, "store.retention");
      if (w < 1) throw Error(ErrorCode::kBadValue, "store.retention must be >= 1 or 'unbounded'");
      plan.store = RetentionPolicy::last(static_cast<std::uint32_t>(w));
    }
  } else {
    spdlog::info("plan: store.retention defaults to 2");
  }

  const auto data = root["data"] ? root["data"] : empty;
  reject_unknown(data, "data", {"path", "split", "seed", "test_fraction", "labels"});
  plan.data.path = optional_field<std::string>(data, "data", "path", "");
  plan.data.split = optional_field<std::string>(data, "data", "split", "iid");
  plan.data.seed = optional_field<std::uint64_t>(data, "data", "seed", 0);
  plan.data.test_fraction = optional_field<double>(data, "data", "test_fraction", 0.2);
  if (auto labels = data["labels"]) {
    if (!labels.IsSequence()) throw Error(ErrorCode::kBadValue, "'data.labels' must be a list");
    for (const auto& l : labels) plan.data.labels.push_back(scalar<std::string>(l, "data.labels"));
  }

  validate_plan(plan);
  return plan;
}

Plan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, fmt::format("cannot read plan '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_plan(ss.str());
}

std::string render_plan(const Plan& plan) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "federation" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "collaborators" << YAML::Value << plan.federation.num_collaborators;
  out << YAML::Key << "rounds" << YAML::Value << plan.federation.rounds;
  out << YAML::Key << "seed" << YAML::Value << plan.federation.seed;
  out << YAML::Key << "mode" << YAML::Value << std::string(to_string(plan.federation.mode));
  out << YAML::Key << "learner" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "family" << YAML::Value << plan.federation.learner.family_id;
  out << YAML::Key << "hyperparameters" << YAML::Value << YAML::BeginMap;
  for (const auto& [k, v] : plan.federation.learner.hyperparameters) {
    out << YAML::Key << k << YAML::Value << v;
  }
  out << YAML::EndMap << YAML::EndMap << YAML::EndMap;

  out << YAML::Key << "tasks" << YAML::Value << YAML::BeginSeq;
  for (const auto& t : plan.tasks) out << t;
  out << YAML::EndSeq;

  out << YAML::Key << "protocol" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "max_frame_size" << YAML::Value << plan.protocol.max_frame_size;
  out << YAML::Key << "poll_interval" << YAML::Value << plan.protocol.poll_interval;
  out << YAML::Key << "wait_interval" << YAML::Value << plan.protocol.wait_interval;
  out << YAML::Key << "codec" << YAML::Value << std::string(protocol::to_string(plan.protocol.codec));
  out << YAML::EndMap;

  out << YAML::Key << "store" << YAML::Value << YAML::BeginMap << YAML::Key << "retention"
      << YAML::Value;
  if (plan.store.window) {
    out << *plan.store.window;
  } else {
    out << "unbounded";
  }
  out << YAML::EndMap;

  out << YAML::Key << "data" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "path" << YAML::Value << plan.data.path;
  out << YAML::Key << "split" << YAML::Value << plan.data.split;
  out << YAML::Key << "seed" << YAML::Value << plan.data.seed;
  out << YAML::Key << "test_fraction" << YAML::Value << plan.data.test_fraction;
  out << YAML::Key << "labels" << YAML::Value << YAML::Flow << plan.data.labels;
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

protocol::WireOptions wire_options(const Plan& plan) {
  return {plan.protocol.max_frame_size, plan.protocol.codec};
}

}  // namespace fedboost
