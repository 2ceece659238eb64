#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "treemat/errors.hpp"
#include "treemat/matrix.hpp"

namespace treemat {

/// Reference from an internal node to one of its children.
struct NodeRef {
  enum class Kind : std::uint8_t { none, node, leaf };

  Kind kind = Kind::none;
  std::size_t index = 0;

  static constexpr NodeRef internal(std::size_t i) { return {Kind::node, i}; }
  static constexpr NodeRef leaf(std::size_t i) { return {Kind::leaf, i}; }

  constexpr bool is_node() const { return kind == Kind::node; }
  constexpr bool is_leaf() const { return kind == Kind::leaf; }
  constexpr bool is_none() const { return kind == Kind::none; }

  friend constexpr bool operator==(NodeRef, NodeRef) = default;
};

/// Position of a leaf in left-to-right order. Reports and the CLI use the
/// 1-based ordinal (leaf 1 is the leftmost).
struct LeafId {
  std::size_t position = 0;

  static constexpr LeafId from_ordinal(std::size_t ordinal) { return {ordinal - 1}; }
  constexpr std::size_t ordinal() const { return position + 1; }

  friend constexpr auto operator<=>(LeafId, LeafId) = default;
};

/// Linear threshold test  w^T x > threshold. A true outcome routes left.
class Predicate {
 public:
  Predicate() = default;
  Predicate(std::vector<double> weights, double threshold)
      : weights_(std::move(weights)), threshold_(threshold) {
    std::size_t nonzero = 0;
    for (std::size_t k = 0; k < weights_.size(); ++k) {
      if (weights_[k] != 0.0) {
        ++nonzero;
        feature_ = static_cast<std::ptrdiff_t>(k);
      }
    }
    if (nonzero != 1 || weights_[static_cast<std::size_t>(feature_)] != 1.0) feature_ = -1;
  }

  /// One-hot test  x[feature] > threshold.
  static Predicate axis(std::size_t feature, std::size_t dim, double threshold) {
    std::vector<double> w(dim, 0.0);
    w.at(feature) = 1.0;
    return {std::move(w), threshold};
  }

  std::span<const double> weights() const { return weights_; }
  double threshold() const { return threshold_; }
  std::size_t dim() const { return weights_.size(); }

  /// Feature index when the weights are one-hot with value 1.
  std::optional<std::size_t> feature() const {
    if (feature_ < 0) return std::nullopt;
    return static_cast<std::size_t>(feature_);
  }

  bool has_nonzero_weight() const {
    return std::any_of(weights_.begin(), weights_.end(), [](double w) { return w != 0.0; });
  }

  double response(std::span<const double> x) const {
    if (feature_ >= 0) return x[static_cast<std::size_t>(feature_)];
    double acc = 0.0;
    for (std::size_t k = 0; k < weights_.size(); ++k) acc += weights_[k] * x[k];
    return acc;
  }

  // Ties are false.
  bool operator()(std::span<const double> x) const { return response(x) > threshold_; }

  friend bool operator==(const Predicate& a, const Predicate& b) {
    return a.weights_ == b.weights_ && a.threshold_ == b.threshold_;
  }

 private:
  std::vector<double> weights_;
  double threshold_ = 0.0;
  std::ptrdiff_t feature_ = -1;
};

struct Split {
  NodeRef left;
  NodeRef right;

  friend bool operator==(const Split&, const Split&) = default;
};

/// Topology of a binary tree. Internal nodes are numbered breadth-first from
/// the root (node 0) and leaves left to right. Nothing is checked on
/// construction; see validate().
class TreeShape {
 public:
  TreeShape() = default;
  TreeShape(std::vector<Split> splits, std::size_t leaf_count)
      : splits_(std::move(splits)), leaf_count_(leaf_count) {}

  std::size_t node_count() const { return splits_.size(); }
  std::size_t leaf_count() const { return leaf_count_; }
  NodeRef root() const { return splits_.empty() ? NodeRef::leaf(0) : NodeRef::internal(0); }
  NodeRef left(std::size_t j) const { return splits_[j].left; }
  NodeRef right(std::size_t j) const { return splits_[j].right; }
  std::span<const Split> splits() const { return splits_; }

  friend bool operator==(const TreeShape&, const TreeShape&) = default;

 private:
  std::vector<Split> splits_;
  std::size_t leaf_count_ = 0;
};

/// Full binary decision tree with linear threshold tests and real-valued leaves.
/// Immutable once constructed.
class BinaryDecisionTree {
 public:
  BinaryDecisionTree() = default;
  BinaryDecisionTree(TreeShape shape, std::vector<Predicate> tests,
                     std::vector<double> leaf_values, std::size_t feature_dim)
      : shape_(std::move(shape)), tests_(std::move(tests)),
        leaf_values_(std::move(leaf_values)), feature_dim_(feature_dim) {}

  const TreeShape& shape() const { return shape_; }
  const std::vector<Predicate>& tests() const { return tests_; }
  const Predicate& test(std::size_t j) const { return tests_[j]; }
  const std::vector<double>& leaf_values() const { return leaf_values_; }
  double leaf_value(LeafId leaf) const { return leaf_values_[leaf.position]; }
  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t node_count() const { return shape_.node_count(); }
  std::size_t leaf_count() const { return shape_.leaf_count(); }

  friend bool operator==(const BinaryDecisionTree&, const BinaryDecisionTree&) = default;

 private:
  TreeShape shape_;
  std::vector<Predicate> tests_;
  std::vector<double> leaf_values_;
  std::size_t feature_dim_ = 0;
};

struct GeneralNode {
  std::vector<NodeRef> children;
  std::vector<double> weights;

  friend bool operator==(const GeneralNode&, const GeneralNode&) = default;
};

/// Rooted tree with any fan-out >= 2 and nonnegative edge weights that sum to
/// one per node. Internal nodes are numbered in depth-first preorder, leaves
/// left to right.
class GeneralTree {
 public:
  GeneralTree() = default;
  GeneralTree(std::vector<GeneralNode> nodes, std::vector<double> leaf_values,
              std::size_t feature_dim = 0)
      : nodes_(std::move(nodes)), leaf_values_(std::move(leaf_values)), feature_dim_(feature_dim) {}

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t leaf_count() const { return leaf_values_.size(); }
  const std::vector<GeneralNode>& nodes() const { return nodes_; }
  const GeneralNode& node(std::size_t j) const { return nodes_[j]; }
  const std::vector<double>& leaf_values() const { return leaf_values_; }
  std::size_t feature_dim() const { return feature_dim_; }
  NodeRef root() const { return nodes_.empty() ? NodeRef::leaf(0) : NodeRef::internal(0); }

  std::size_t max_fanout() const {
    std::size_t k = 0;
    for (const auto& n : nodes_) k = std::max(k, n.children.size());
    return k;
  }

  friend bool operator==(const GeneralTree&, const GeneralTree&) = default;

 private:
  std::vector<GeneralNode> nodes_;
  std::vector<double> leaf_values_;
  std::size_t feature_dim_ = 0;
};

// ---------------------------------------------------------------------------
// Validation

struct Violation {
  std::string message;
  std::optional<std::size_t> node;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  explicit operator bool() const { return ok(); }

  std::string to_string() const {
    std::string out;
    for (const auto& v : violations) {
      if (!out.empty()) out += '\n';
      if (v.node) out += "node " + std::to_string(*v.node) + ": ";
      out += v.message;
    }
    return out;
  }
};

namespace detail {

// Breadth-first visit from the root. Reports dangling, out-of-range and
// shared children, and stops descending into anything already seen.
template <class ChildrenOf>
void check_reachability(std::size_t node_count, std::size_t leaf_count, ChildrenOf&& children_of,
                        ValidationReport& report, std::vector<std::size_t>& bfs_nodes) {
  std::vector<bool> node_seen(node_count, false), leaf_seen(leaf_count, false);
  std::deque<std::size_t> queue{0};
  node_seen[0] = true;
  while (!queue.empty()) {
    const std::size_t j = queue.front();
    queue.pop_front();
    bfs_nodes.push_back(j);
    for (const NodeRef& c : children_of(j)) {
      if (c.is_none()) continue;
      if (c.is_node()) {
        if (c.index >= node_count) {
          report.violations.push_back({"child refers to missing internal node " + std::to_string(c.index), j});
        } else if (node_seen[c.index]) {
          report.violations.push_back({"internal node " + std::to_string(c.index) + " has more than one parent or closes a cycle", j});
        } else {
          node_seen[c.index] = true;
          queue.push_back(c.index);
        }
      } else {
        if (c.index >= leaf_count) {
          report.violations.push_back({"child refers to missing leaf " + std::to_string(c.index + 1), j});
        } else if (leaf_seen[c.index]) {
          report.violations.push_back({"leaf " + std::to_string(c.index + 1) + " has more than one parent", j});
        } else {
          leaf_seen[c.index] = true;
        }
      }
    }
  }
  for (std::size_t j = 0; j < node_count; ++j)
    if (!node_seen[j]) report.violations.push_back({"internal node unreachable from the root", j});
  for (std::size_t i = 0; i < leaf_count; ++i)
    if (!leaf_seen[i]) report.violations.push_back({"leaf " + std::to_string(i + 1) + " unreachable from the root", std::nullopt});
}

// Leaves in left-to-right order, assuming a valid tree.
template <class ChildrenOf>
std::vector<std::size_t> leaf_order(NodeRef root, ChildrenOf&& children_of) {
  std::vector<std::size_t> out;
  std::vector<NodeRef> stack{root};
  while (!stack.empty()) {
    const NodeRef r = stack.back();
    stack.pop_back();
    if (r.is_leaf()) {
      out.push_back(r.index);
    } else if (r.is_node()) {
      const auto& cs = children_of(r.index);
      for (auto it = cs.rbegin(); it != cs.rend(); ++it) stack.push_back(*it);
    }
  }
  return out;
}

inline std::vector<NodeRef> split_children(const TreeShape& s, std::size_t j) {
  return {s.left(j), s.right(j)};
}

}  // namespace detail

/// Checks fullness, |L| = |N| + 1, reachability, and the breadth-first /
/// left-to-right numbering.
inline ValidationReport validate(const TreeShape& shape) {
  ValidationReport report;
  const std::size_t n = shape.node_count();
  if (n == 0) {
    report.violations.push_back({"tree has no internal node", std::nullopt});
    return report;
  }
  if (shape.leaf_count() != n + 1)
    report.violations.push_back({"leaf count " + std::to_string(shape.leaf_count()) +
                                     " != internal node count + 1 (" + std::to_string(n + 1) + ")",
                                 std::nullopt});
  for (std::size_t j = 0; j < n; ++j) {
    if (shape.left(j).is_none()) report.violations.push_back({"missing left child", j});
    if (shape.right(j).is_none()) report.violations.push_back({"missing right child", j});
  }
  std::vector<std::size_t> bfs;
  detail::check_reachability(
      n, shape.leaf_count(), [&](std::size_t j) { return detail::split_children(shape, j); },
      report, bfs);
  if (!report.ok()) return report;

  for (std::size_t k = 0; k < bfs.size(); ++k)
    if (bfs[k] != k) {
      report.violations.push_back({"internal nodes are not numbered breadth-first (found at position " +
                                       std::to_string(k) + ")",
                                   bfs[k]});
      break;
    }
  const auto leaves = detail::leaf_order(shape.root(), [&](std::size_t j) {
    return detail::split_children(shape, j);
  });
  for (std::size_t k = 0; k < leaves.size(); ++k)
    if (leaves[k] != k) {
      report.violations.push_back({"leaves are not numbered left to right (leaf " +
                                       std::to_string(leaves[k] + 1) + " at position " +
                                       std::to_string(k + 1) + ")",
                                   std::nullopt});
      break;
    }
  return report;
}

inline ValidationReport validate(const BinaryDecisionTree& tree) {
  ValidationReport report = validate(tree.shape());
  if (tree.tests().size() != tree.node_count())
    report.violations.push_back({"expected one test per internal node", std::nullopt});
  if (tree.leaf_values().size() != tree.leaf_count())
    report.violations.push_back({"expected one value per leaf", std::nullopt});
  for (std::size_t j = 0; j < tree.tests().size(); ++j) {
    const auto& p = tree.test(j);
    if (p.dim() != tree.feature_dim())
      report.violations.push_back({"test has " + std::to_string(p.dim()) + " weights, feature dimension is " +
                                       std::to_string(tree.feature_dim()),
                                   j});
    else if (!p.has_nonzero_weight())
      report.violations.push_back({"test has no nonzero weight", j});
  }
  return report;
}

inline ValidationReport validate(const GeneralTree& tree) {
  ValidationReport report;
  const std::size_t n = tree.node_count();
  if (n == 0) {
    report.violations.push_back({"tree has no internal node", std::nullopt});
    return report;
  }
  std::size_t edges = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const auto& node = tree.node(j);
    edges += node.children.size();
    if (node.children.size() < 2) report.violations.push_back({"fewer than two children", j});
    if (node.weights.size() != node.children.size()) {
      report.violations.push_back({"edge weights not aligned with children", j});
      continue;
    }
    double sum = 0.0;
    for (double w : node.weights) {
      if (!(w >= 0.0)) report.violations.push_back({"negative edge weight", j});
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) report.violations.push_back({"edge weights do not sum to 1", j});
    for (const auto& c : node.children)
      if (c.is_none()) report.violations.push_back({"empty child reference", j});
  }
  if (edges + 1 != n + tree.leaf_count())
    report.violations.push_back({"edge count does not match a tree on these nodes", std::nullopt});
  std::vector<std::size_t> bfs;
  detail::check_reachability(
      n, tree.leaf_count(), [&](std::size_t j) -> const std::vector<NodeRef>& { return tree.node(j).children; },
      report, bfs);
  if (!report.ok()) return report;

  // Preorder numbering check.
  std::size_t expect_node = 0, expect_leaf = 0;
  std::vector<NodeRef> stack{tree.root()};
  while (!stack.empty()) {
    const NodeRef r = stack.back();
    stack.pop_back();
    if (r.is_leaf()) {
      if (r.index != expect_leaf++) {
        report.violations.push_back({"leaves are not numbered left to right", std::nullopt});
        break;
      }
    } else {
      if (r.index != expect_node++) {
        report.violations.push_back({"internal nodes are not numbered in depth-first preorder", r.index});
        break;
      }
      const auto& cs = tree.node(r.index).children;
      for (auto it = cs.rbegin(); it != cs.rend(); ++it) stack.push_back(*it);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Construction with canonical numbering

/// Canonical renumbering of a binary tree given with arbitrary indices.
struct CanonicalOrder {
  TreeShape shape;
  std::vector<std::size_t> node_from;  // new node k was old node node_from[k]
  std::vector<std::size_t> leaf_from;  // new leaf k was old leaf leaf_from[k]
};

/// Numbers the internal nodes reachable from `root` breadth-first and its
/// leaves left to right. Throws ModelError if a node is reached twice.
inline CanonicalOrder canonicalize(std::span<const Split> splits, std::size_t leaf_total,
                                   NodeRef root) {
  constexpr std::size_t npos = static_cast<std::size_t>(-1);
  CanonicalOrder out;
  std::vector<std::size_t> node_id(splits.size(), npos), leaf_id(leaf_total, npos);
  if (root.is_node()) {
    std::deque<std::size_t> queue{root.index};
    while (!queue.empty()) {
      const std::size_t j = queue.front();
      queue.pop_front();
      if (node_id[j] != npos) throw ModelError("node reached twice; input is not a tree");
      node_id[j] = out.node_from.size();
      out.node_from.push_back(j);
      for (NodeRef c : {splits[j].left, splits[j].right})
        if (c.is_node()) queue.push_back(c.index);
    }
  }
  out.leaf_from = detail::leaf_order(root, [&](std::size_t j) {
    return std::vector<NodeRef>{splits[j].left, splits[j].right};
  });
  for (std::size_t k = 0; k < out.leaf_from.size(); ++k) {
    if (leaf_id[out.leaf_from[k]] != npos) throw ModelError("leaf reached twice; input is not a tree");
    leaf_id[out.leaf_from[k]] = k;
  }
  auto remap = [&](NodeRef r) {
    if (r.is_node()) return NodeRef::internal(node_id[r.index]);
    if (r.is_leaf()) return NodeRef::leaf(leaf_id[r.index]);
    return r;
  };
  std::vector<Split> renumbered(out.node_from.size());
  for (std::size_t k = 0; k < renumbered.size(); ++k)
    renumbered[k] = {remap(splits[out.node_from[k]].left), remap(splits[out.node_from[k]].right)};
  out.shape = TreeShape(std::move(renumbered), out.leaf_from.size());
  return out;
}

/// Accumulates nodes in any order and renumbers them canonically on build().
class BinaryTreeBuilder {
 public:
  NodeRef add_leaf(double value) {
    leaf_values_.push_back(value);
    return NodeRef::leaf(leaf_values_.size() - 1);
  }

  NodeRef add_node(Predicate test, NodeRef left, NodeRef right) {
    tests_.push_back(std::move(test));
    splits_.push_back({left, right});
    return NodeRef::internal(splits_.size() - 1);
  }

  /// Renumbers internal nodes breadth-first from `root` and leaves left to
  /// right. Anything unreachable from `root` is dropped.
  BinaryDecisionTree build(NodeRef root, std::size_t feature_dim) const {
    if (!root.is_node()) {
      std::vector<double> values;
      if (root.is_leaf()) values.push_back(leaf_values_.at(root.index));
      return {TreeShape({}, values.size()), {}, std::move(values), feature_dim};
    }
    auto order = canonicalize(splits_, leaf_values_.size(), root);
    std::vector<Predicate> tests(order.node_from.size());
    for (std::size_t k = 0; k < tests.size(); ++k) tests[k] = tests_[order.node_from[k]];
    std::vector<double> values(order.leaf_from.size());
    for (std::size_t k = 0; k < values.size(); ++k) values[k] = leaf_values_[order.leaf_from[k]];
    return {std::move(order.shape), std::move(tests), std::move(values), feature_dim};
  }

 private:
  std::vector<Split> splits_;
  std::vector<Predicate> tests_;
  std::vector<double> leaf_values_;
};

/// Same as BinaryTreeBuilder for general trees; build() numbers internal nodes
/// in depth-first preorder.
class GeneralTreeBuilder {
 public:
  NodeRef add_leaf(double value) {
    leaf_values_.push_back(value);
    return NodeRef::leaf(leaf_values_.size() - 1);
  }

  NodeRef add_node(std::vector<NodeRef> children, std::vector<double> weights) {
    nodes_.push_back({std::move(children), std::move(weights)});
    return NodeRef::internal(nodes_.size() - 1);
  }

  GeneralTree build(NodeRef root, std::size_t feature_dim = 0) const {
    std::vector<std::size_t> node_id(nodes_.size(), npos), leaf_id(leaf_values_.size(), npos);
    std::vector<std::size_t> order;
    std::vector<std::size_t> leaves;
    std::vector<NodeRef> stack{root};
    while (!stack.empty()) {
      const NodeRef r = stack.back();
      stack.pop_back();
      if (r.is_leaf()) {
        if (leaf_id[r.index] != npos) throw ModelError("leaf reached twice; input is not a tree");
        leaf_id[r.index] = leaves.size();
        leaves.push_back(r.index);
      } else if (r.is_node()) {
        if (node_id[r.index] != npos) throw ModelError("node reached twice; input is not a tree");
        node_id[r.index] = order.size();
        order.push_back(r.index);
        const auto& cs = nodes_[r.index].children;
        for (auto it = cs.rbegin(); it != cs.rend(); ++it) stack.push_back(*it);
      }
    }
    std::vector<GeneralNode> nodes(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
      const auto& src = nodes_[order[k]];
      nodes[k].weights = src.weights;
      for (const auto& c : src.children)
        nodes[k].children.push_back(c.is_node() ? NodeRef::internal(node_id[c.index])
                                                : NodeRef::leaf(leaf_id[c.index]));
    }
    std::vector<double> values(leaves.size());
    for (std::size_t k = 0; k < leaves.size(); ++k) values[k] = leaf_values_[leaves[k]];
    return {std::move(nodes), std::move(values), feature_dim};
  }

 private:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::vector<GeneralNode> nodes_;
  std::vector<double> leaf_values_;
};

// ---------------------------------------------------------------------------
// Recursive traversal (ground truth)

inline void check_dimension(const BinaryDecisionTree& tree, std::span<const double> x) {
  if (x.size() != tree.feature_dim())
    throw DimensionError("feature vector has " + std::to_string(x.size()) +
                         " values, tree expects " + std::to_string(tree.feature_dim()));
}

/// Walks from the root, going left on a true test and right otherwise.
inline LeafId naive_traverse(const BinaryDecisionTree& tree, std::span<const double> x) {
  check_dimension(tree, x);
  NodeRef at = tree.shape().root();
  while (at.is_node())
    at = tree.test(at.index)(x) ? tree.shape().left(at.index) : tree.shape().right(at.index);
  return {at.index};
}

struct Walk {
  std::vector<std::size_t> nodes;  // visited internal nodes, root first
  LeafId leaf;
};

inline Walk walk(const BinaryDecisionTree& tree, std::span<const double> x) {
  check_dimension(tree, x);
  Walk out;
  NodeRef at = tree.shape().root();
  while (at.is_node()) {
    out.nodes.push_back(at.index);
    at = tree.test(at.index)(x) ? tree.shape().left(at.index) : tree.shape().right(at.index);
  }
  out.leaf = {at.index};
  return out;
}

// ---------------------------------------------------------------------------
// Random generation

/// Random full binary tree: the root always splits, and every other frontier
/// node splits with probability `split_probability` until `depth_bound`.
/// Tests are one-hot with thresholds in [0,1); leaf values are in [0,1).
inline BinaryDecisionTree generate_random_tree(std::size_t depth_bound, std::size_t feature_dim,
                                               std::uint64_t seed,
                                               double split_probability = 0.5) {
  if (depth_bound < 1) throw std::invalid_argument("depth bound must be at least 1");
  if (feature_dim < 1) throw std::invalid_argument("feature dimension must be at least 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> feature(0, feature_dim - 1);
  std::bernoulli_distribution splits(split_probability);

  // Expand breadth-first so the draw order follows the frontier. Nodes and
  // leaves get provisional indices in creation order; build() renumbers.
  struct Pending {
    std::size_t depth;
    std::size_t parent;
    bool left;
  };
  std::vector<Predicate> tests;
  std::vector<Split> links;
  std::vector<double> leaf_values;
  NodeRef root;
  std::deque<Pending> frontier{{0, 0, true}};
  while (!frontier.empty()) {
    const Pending p = frontier.front();
    frontier.pop_front();
    NodeRef here;
    if (p.depth < depth_bound && (p.depth == 0 || splits(rng))) {
      tests.push_back(Predicate::axis(feature(rng), feature_dim, unit(rng)));
      links.emplace_back();
      here = NodeRef::internal(tests.size() - 1);
      frontier.push_back({p.depth + 1, here.index, true});
      frontier.push_back({p.depth + 1, here.index, false});
    } else {
      leaf_values.push_back(unit(rng));
      here = NodeRef::leaf(leaf_values.size() - 1);
    }
    if (p.depth == 0)
      root = here;
    else if (p.left)
      links[p.parent].left = here;
    else
      links[p.parent].right = here;
  }
  BinaryTreeBuilder b;
  for (double v : leaf_values) b.add_leaf(v);
  for (std::size_t j = 0; j < tests.size(); ++j) b.add_node(tests[j], links[j].left, links[j].right);
  return b.build(root, feature_dim);
}

/// Random general tree with fan-out uniform in [2, max_fanout] and edge
/// weights drawn uniformly from the probability simplex.
inline GeneralTree generate_random_general_tree(std::size_t depth_bound, std::size_t max_fanout,
                                                std::uint64_t seed, std::size_t feature_dim = 1,
                                                double split_probability = 0.5) {
  if (depth_bound < 1) throw std::invalid_argument("depth bound must be at least 1");
  if (max_fanout < 2) throw std::invalid_argument("maximum fan-out must be at least 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> fanout(2, max_fanout);
  std::exponential_distribution<double> gamma1(1.0);
  std::bernoulli_distribution splits(split_probability);

  GeneralTreeBuilder b;
  auto grow = [&](auto& self, std::size_t depth) -> NodeRef {
    if (depth < depth_bound && (depth == 0 || splits(rng))) {
      const std::size_t k = fanout(rng);
      std::vector<double> w(k);
      double sum = 0.0;
      for (auto& x : w) sum += (x = gamma1(rng));
      for (auto& x : w) x /= sum;
      std::vector<NodeRef> children;
      for (std::size_t c = 0; c < k; ++c) children.push_back(self(self, depth + 1));
      return b.add_node(std::move(children), std::move(w));
    }
    return b.add_leaf(unit(rng));
  };
  const NodeRef root = grow(grow, 0);
  return b.build(root, feature_dim);
}

/// Instances uniform in [0,1)^dim, one per row.
inline Matrix<double> generate_instances(std::size_t count, std::size_t feature_dim,
                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix<double> out(count, feature_dim);
  for (std::size_t i = 0; i < count; ++i)
    for (auto& v : out.row(i)) v = unit(rng);
  return out;
}

}  // namespace treemat
