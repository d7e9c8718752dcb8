#include "fedboost/store.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "fedboost/error.hpp"

namespace fedboost {

Store::Store(RetentionPolicy policy) : policy_(policy) {
  if (policy_.window && *policy_.window < 1) {
    throw Error(ErrorCode::kBadValue, "retention window must be >= 1");
  }
}

void Store::put(StoreKey key, Bytes value) {
  entries_.insert_or_assign(std::move(key), std::move(value));
  ++puts_;
}

std::optional<Bytes> Store::get(const StoreKey& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::vector<StoreEntry> Store::query(const StoreQuery& q) const {
  std::vector<StoreEntry> out;
  for (const auto& [key, value] : entries_) {
    if (q.origin_prefix && key.origin.rfind(*q.origin_prefix, 0) != 0) continue;
    if (q.round && key.round != q.round) continue;
    if (q.task && key.task != *q.task) continue;
    if (q.name && key.name != *q.name) continue;
    bool has_tags = std::all_of(q.tags.begin(), q.tags.end(), [&](const std::string& t) {
      return std::find(key.tags.begin(), key.tags.end(), t) != key.tags.end();
    });
    if (!has_tags) continue;
    out.push_back({key, value});
  }
  return out;
}

std::size_t Store::clean_up(std::uint32_t current_round) {
  if (!policy_.window) return 0;
  const std::uint32_t window = *policy_.window;
  if (current_round < window) return 0;
  const std::uint32_t cutoff = current_round - window;  // evict round <= cutoff
  return std::erase_if(entries_, [&](const auto& kv) {
    return kv.first.round && *kv.first.round <= cutoff;
  });
}

std::size_t Store::round_tagged_size() const {
  return static_cast<std::size_t>(std::count_if(
      entries_.begin(), entries_.end(), [](const auto& kv) { return kv.first.round.has_value(); }));
}

}  // namespace fedboost
