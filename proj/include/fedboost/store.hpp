#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedboost/bytes.hpp"

namespace fedboost {

struct StoreKey {
  std::string origin;
  std::optional<std::uint32_t> round;  // nullopt: round-independent, never evicted
  std::string task;
  std::string name;
  std::vector<std::string> tags;

  auto operator<=>(const StoreKey&) const = default;
  bool operator==(const StoreKey&) const = default;
};

struct RetentionPolicy {
  std::optional<std::uint32_t> window = 2;  // nullopt: unbounded

  static RetentionPolicy unbounded() { return {std::nullopt}; }
  static RetentionPolicy last(std::uint32_t rounds) { return {rounds}; }
  bool bounded() const { return window.has_value(); }
  friend bool operator==(const RetentionPolicy&, const RetentionPolicy&) = default;
};

/// Every set field must match; `tags` must all be present on the entry.
struct StoreQuery {
  std::optional<std::string> origin_prefix;
  std::optional<std::uint32_t> round;
  std::optional<std::string> task;
  std::optional<std::string> name;
  std::vector<std::string> tags;
};

struct StoreEntry {
  StoreKey key;
  Bytes value;
};

// Round-indexed key/value store with bounded retention. Not synchronized: it
// belongs to one role and is only touched from that role's coordinator.
class Store {
 public:
  explicit Store(RetentionPolicy policy = {});

  /// Last writer wins.
  void put(StoreKey key, Bytes value);
  std::optional<Bytes> get(const StoreKey& key) const;
  /// Matching entries in key order.
  std::vector<StoreEntry> query(const StoreQuery& q) const;

  /// Drops round-tagged entries with round <= current_round - window. Returns
  /// the number evicted (always 0 when unbounded).
  std::size_t clean_up(std::uint32_t current_round);

  std::size_t size() const { return entries_.size(); }
  std::size_t round_tagged_size() const;
  std::uint64_t total_puts() const { return puts_; }
  const RetentionPolicy& policy() const { return policy_; }

 private:
  RetentionPolicy policy_;
  std::map<StoreKey, Bytes> entries_;
  std::uint64_t puts_ = 0;
};

}  // namespace fedboost
