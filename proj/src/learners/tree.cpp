#include <algorithm>
#include <numeric>
#include <optional>

#include <fmt/format.h>

#include "families.hpp"

namespace fedboost {

TreeModel::TreeModel(std::uint32_t num_features, std::vector<Node> nodes)
    : num_features_(num_features), nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw Error(ErrorCode::kInvalidArgument, "tree has no nodes");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.is_leaf()) continue;
    // Children always come after their parent, so prediction terminates.
    if (static_cast<std::uint32_t>(n.feature) >= num_features_ || n.left <= i || n.right <= i ||
        n.left >= nodes_.size() || n.right >= nodes_.size()) {
      throw Error(ErrorCode::kMalformedPayload, fmt::format("tree node {} is inconsistent", i));
    }
  }
}

std::size_t TreeModel::num_leaves() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

ClassId TreeModel::predict_unchecked(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& n = nodes_[i];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes_[i].label;
}

// [num_features: u32][node_count: u32] then per node
// [feature: i32][threshold: f64][left: u32][right: u32][label: u32]
Bytes TreeModel::encode() const {
  ByteWriter w;
  w.u32(num_features_);
  w.u32(static_cast<std::uint32_t>(nodes_.size()));
  for (const auto& n : nodes_) {
    w.i32(n.feature);
    w.f64(n.threshold);
    w.u32(n.left);
    w.u32(n.right);
    w.u32(n.label);
  }
  return std::move(w).take();
}

std::shared_ptr<const TreeModel> TreeModel::decode(std::span<const std::uint8_t> payload) {
  ByteReader r(payload);
  auto arity = r.u32();
  auto count = r.u32();
  if (count == 0 || static_cast<std::uint64_t>(count) * 24 != r.remaining()) {
    throw Error(ErrorCode::kMalformedPayload,
                fmt::format("tree payload: {} nodes but {} bytes left", count, r.remaining()));
  }
  std::vector<Node> nodes(count);
  for (auto& n : nodes) {
    n.feature = r.i32();
    n.threshold = r.f64();
    n.left = r.u32();
    n.right = r.u32();
    n.label = r.u32();
  }
  detail::check_payload_done(r, kFamily);
  return std::make_shared<TreeModel>(arity, std::move(nodes));
}

namespace detail {

namespace {

// Best-first CART growth with weighted Gini impurity. Each open leaf keeps its
// members sorted along every feature so splits never re-sort.
class TreeBuilder {
 public:
  TreeBuilder(const DatasetShard& shard, std::span<const double> p, std::size_t max_leaves)
      : shard_(shard), p_(p), k_(shard.num_classes), d_(shard.num_features()),
        max_leaves_(max_leaves), goes_left_(shard.size(), 0) {}

  std::shared_ptr<const TreeModel> build() {
    const std::size_t n = shard_.size();
    Leaf root;
    root.node = 0;
    root.sorted.resize(d_);
    for (std::size_t f = 0; f < d_; ++f) {
      auto& s = root.sorted[f];
      s.resize(n);
      std::iota(s.begin(), s.end(), 0);
      std::sort(s.begin(), s.end(), [&](std::size_t a, std::size_t b) {
        double xa = shard_.features(a, f), xb = shard_.features(b, f);
        return xa < xb || (xa == xb && a < b);
      });
    }
    root.members.resize(n);
    std::iota(root.members.begin(), root.members.end(), 0);
    nodes_.push_back(make_leaf_node(root.members));
    evaluate(root);
    open_.push_back(std::move(root));

    std::size_t leaves = 1;
    while (leaves < max_leaves_) {
      std::optional<std::size_t> pick;
      for (std::size_t i = 0; i < open_.size(); ++i) {
        if (!open_[i].split) continue;
        if (!pick || open_[i].split->gain > open_[*pick].split->gain) pick = i;
      }
      if (!pick) break;
      Leaf leaf = std::move(open_[*pick]);
      open_.erase(open_.begin() + static_cast<std::ptrdiff_t>(*pick));
      auto [left, right] = split(leaf);
      evaluate(left);
      evaluate(right);
      open_.push_back(std::move(left));
      open_.push_back(std::move(right));
      // Keep ties resolved toward the earliest-created node.
      std::sort(open_.begin(), open_.end(),
                [](const Leaf& a, const Leaf& b) { return a.node < b.node; });
      ++leaves;
    }
    return std::make_shared<TreeModel>(static_cast<std::uint32_t>(d_), std::move(nodes_));
  }

 private:
  struct Split {
    double gain = 0.0;
    std::size_t feature = 0;
    double threshold = 0.0;
  };
  struct Leaf {
    std::uint32_t node = 0;
    std::vector<std::size_t> members;
    std::vector<std::vector<std::size_t>> sorted;
    std::optional<Split> split;
  };

  TreeModel::Node make_leaf_node(std::span<const std::size_t> members) const {
    std::vector<double> totals(k_, 0.0);
    for (auto i : members) totals[shard_.labels[i]] += p_[i];
    TreeModel::Node node;
    node.label = static_cast<ClassId>(argmax_first(totals));
    return node;
  }

  static double gini_score(std::span<const double> counts, double total) {
    double s = 0.0;
    for (double c : counts) s += c * c;
    return s / total;
  }

  void evaluate(Leaf& leaf) const {
    std::vector<double> totals(k_, 0.0);
    double total = 0.0;
    for (auto i : leaf.members) {
      totals[shard_.labels[i]] += p_[i];
      total += p_[i];
    }
    std::size_t present = 0;
    for (double t : totals) present += t > 0.0;
    if (present < 2 || leaf.members.size() < 2) return;

    const double parent = gini_score(totals, total);
    const double eps = 1e-12 * total;
    std::optional<Split> best;
    std::vector<double> left(k_), right(k_);
    for (std::size_t f = 0; f < d_; ++f) {
      const auto& order = leaf.sorted[f];
      std::fill(left.begin(), left.end(), 0.0);
      double wl = 0.0;
      for (std::size_t pos = 0; pos + 1 < order.size(); ++pos) {
        const std::size_t i = order[pos];
        left[shard_.labels[i]] += p_[i];
        wl += p_[i];
        const double a = shard_.features(i, f);
        const double b = shard_.features(order[pos + 1], f);
        if (a == b) continue;
        double wr = 0.0;
        for (std::size_t c = 0; c < k_; ++c) {
          right[c] = totals[c] - left[c];
          wr += right[c];
        }
        if (!(wr > 0.0)) continue;
        const double gain = gini_score(left, wl) + gini_score(right, wr) - parent;
        if (gain > eps && (!best || gain > best->gain)) {
          best = Split{gain, f, std::midpoint(a, b)};
        }
      }
    }
    leaf.split = best;
  }

  std::pair<Leaf, Leaf> split(Leaf& leaf) {
    const auto& s = *leaf.split;
    for (auto i : leaf.members) goes_left_[i] = shard_.features(i, s.feature) <= s.threshold;

    Leaf left, right;
    for (auto i : leaf.members) (goes_left_[i] ? left.members : right.members).push_back(i);
    left.sorted.resize(d_);
    right.sorted.resize(d_);
    for (std::size_t f = 0; f < d_; ++f) {
      left.sorted[f].reserve(left.members.size());
      right.sorted[f].reserve(right.members.size());
      for (auto i : leaf.sorted[f]) (goes_left_[i] ? left.sorted[f] : right.sorted[f]).push_back(i);
    }

    left.node = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back(make_leaf_node(left.members));
    right.node = static_cast<std::uint32_t>(nodes_.size());
    nodes_.push_back(make_leaf_node(right.members));

    auto& parent = nodes_[leaf.node];
    parent.feature = static_cast<std::int32_t>(s.feature);
    parent.threshold = s.threshold;
    parent.left = left.node;
    parent.right = right.node;
    return {std::move(left), std::move(right)};
  }

  const DatasetShard& shard_;
  std::span<const double> p_;
  std::size_t k_;
  std::size_t d_;
  std::size_t max_leaves_;
  std::vector<std::uint8_t> goes_left_;
  std::vector<TreeModel::Node> nodes_;
  std::vector<Leaf> open_;
};

WeakModelPtr fit_tree(const LearnerSpec& spec, const DatasetShard& shard,
                      std::span<const double> p, std::uint64_t) {
  auto max_leaves = integral_param(spec.hyperparameters, "max_leaves", 2);
  return TreeBuilder(shard, p, static_cast<std::size_t>(max_leaves)).build();
}

}  // namespace

LearnerFamily tree_family() {
  LearnerFamily f;
  f.family_id = std::string(TreeModel::kFamily);
  f.defaults = {{"max_leaves", 10.0}};
  f.validate = [](const std::map<std::string, double>& params) {
    (void)integral_param(params, "max_leaves", 2);
  };
  f.fit = fit_tree;
  f.decode = [](std::span<const std::uint8_t> b) -> WeakModelPtr { return TreeModel::decode(b); };
  return f;
}

}  // namespace detail
}  // namespace fedboost
