#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "treemat/bits.hpp"
#include "treemat/errors.hpp"
#include "treemat/matrix.hpp"
#include "treemat/tree.hpp"

namespace treemat {

/// Leaf intervals and depths of a valid tree. Because leaves are numbered
/// left to right, every subtree covers a contiguous run of leaves.
struct SubtreeLayout {
  struct Span {
    std::size_t lo = 0;   // first leaf of the node's subtree
    std::size_t mid = 0;  // first leaf of its right subtree
    std::size_t hi = 0;   // one past the last leaf
  };
  std::vector<Span> nodes;
  std::vector<int> leaf_depth;
};

inline SubtreeLayout compute_layout(const TreeShape& shape) {
  const std::size_t n = shape.node_count();
  SubtreeLayout out;
  out.nodes.resize(n);
  out.leaf_depth.assign(shape.leaf_count(), 0);
  auto interval = [&](NodeRef r) -> std::pair<std::size_t, std::size_t> {
    if (r.is_leaf()) return {r.index, r.index + 1};
    return {out.nodes[r.index].lo, out.nodes[r.index].hi};
  };
  // Breadth-first numbering puts children after parents.
  for (std::size_t j = n; j-- > 0;) {
    const auto [a, m] = interval(shape.left(j));
    const auto [m2, b] = interval(shape.right(j));
    out.nodes[j] = {a, m, b};
    (void)m2;
  }
  std::vector<int> node_depth(n, 0);
  for (std::size_t j = 0; j < n; ++j)
    for (NodeRef c : {shape.left(j), shape.right(j)}) {
      if (c.is_node())
        node_depth[c.index] = node_depth[j] + 1;
      else
        out.leaf_depth[c.index] = node_depth[j] + 1;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Binary tree matrices. Rows are leaves, columns are internal nodes.

/// Column j has zeros exactly at the leaves of node j's left subtree: the
/// leaves ruled out when node j's test is false.
inline BitMatrix build_right_matrix(const TreeShape& shape) {
  const auto layout = compute_layout(shape);
  BitMatrix m(shape.leaf_count(), shape.node_count(), true);
  for (std::size_t j = 0; j < shape.node_count(); ++j)
    for (std::size_t i = layout.nodes[j].lo; i < layout.nodes[j].mid; ++i) m.set(i, j, false);
  return m;
}

/// Column j has zeros exactly at the leaves of node j's right subtree.
inline BitMatrix build_left_matrix(const TreeShape& shape) {
  const auto layout = compute_layout(shape);
  BitMatrix m(shape.leaf_count(), shape.node_count(), true);
  for (std::size_t j = 0; j < shape.node_count(); ++j)
    for (std::size_t i = layout.nodes[j].mid; i < layout.nodes[j].hi; ++i) m.set(i, j, false);
  return m;
}

inline BitMatrix complement(const BitMatrix& m) {
  BitMatrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto src = m.row_words(i);
    auto dst = out.row_words(i);
    for (std::size_t w = 0; w < src.size(); ++w) dst[w] = ~src[w];
  }
  // Clear padding bits beyond cols().
  if (m.cols() % 64 != 0)
    for (std::size_t i = 0; i < m.rows(); ++i)
      out.row_words(i).back() &= (Bitvector::word_type{1} << (m.cols() % 64)) - 1;
  return out;
}

/// {-1, 0, +1} matrix stored as two bit planes.
class SignedPathMatrix {
 public:
  SignedPathMatrix() = default;
  SignedPathMatrix(BitMatrix positive, BitMatrix negative)
      : positive_(std::move(positive)), negative_(std::move(negative)) {
    if (positive_.rows() != negative_.rows() || positive_.cols() != negative_.cols())
      throw DimensionError("signed matrix planes differ in shape");
    positive_count_.resize(rows());
    negative_count_.resize(rows());
    for (std::size_t i = 0; i < rows(); ++i) {
      positive_count_[i] = static_cast<long>(positive_.row_count(i));
      negative_count_[i] = static_cast<long>(negative_.row_count(i));
    }
  }

  std::size_t rows() const { return positive_.rows(); }
  std::size_t cols() const { return positive_.cols(); }

  int operator()(std::size_t i, std::size_t j) const {
    return (positive_(i, j) ? 1 : 0) - (negative_(i, j) ? 1 : 0);
  }

  /// ||P_i||_1
  long row_norm(std::size_t i) const { return positive_count_[i] + negative_count_[i]; }

  /// <P_i, s> for the signed vector s with s_j = +1 where `plus` is set and
  /// -1 elsewhere. Exact integer arithmetic.
  long signed_dot(std::size_t i, const Bitvector& plus) const {
    const long pp = static_cast<long>(positive_.row_dot(i, plus));
    const long np = static_cast<long>(negative_.row_dot(i, plus));
    return (2 * pp - positive_count_[i]) - (2 * np - negative_count_[i]);
  }

  const BitMatrix& positive() const { return positive_; }
  const BitMatrix& negative() const { return negative_; }

  Matrix<int> dense() const {
    Matrix<int> out(rows(), cols());
    for (std::size_t i = 0; i < rows(); ++i)
      for (std::size_t j = 0; j < cols(); ++j) out(i, j) = (*this)(i, j);
    return out;
  }

  friend bool operator==(const SignedPathMatrix& a, const SignedPathMatrix& b) {
    return a.positive_ == b.positive_ && a.negative_ == b.negative_;
  }

 private:
  BitMatrix positive_;
  BitMatrix negative_;
  std::vector<long> positive_count_;
  std::vector<long> negative_count_;
};

/// Entrywise a - b of two bit matrices.
inline SignedPathMatrix signed_difference(const BitMatrix& a, const BitMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("matrices differ in shape");
  BitMatrix pos(a.rows(), a.cols()), neg(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ra = a.row_words(i), rb = b.row_words(i);
    auto rp = pos.row_words(i), rn = neg.row_words(i);
    for (std::size_t w = 0; w < ra.size(); ++w) {
      rp[w] = ra[w] & ~rb[w];
      rn[w] = ~ra[w] & rb[w];
    }
  }
  return {std::move(pos), std::move(neg)};
}

/// P = B_R - B_L: row i holds -1 at ancestors where the path to leaf i goes
/// left (true), +1 where it goes right (false), 0 elsewhere.
inline SignedPathMatrix build_signed_matrix(const TreeShape& shape) {
  return signed_difference(build_right_matrix(shape), build_left_matrix(shape));
}

/// Root-to-leaf edge counts, left to right.
inline std::vector<int> build_depth_vector(const TreeShape& shape) {
  return compute_layout(shape).leaf_depth;
}

inline void check_probabilities(std::span<const double> p, std::size_t expected) {
  if (p.size() != expected)
    throw DimensionError("expected " + std::to_string(expected) + " node probabilities, got " +
                         std::to_string(p.size()));
  for (std::size_t j = 0; j < p.size(); ++j)
    if (!(p[j] >= 0.0 && p[j] <= 1.0))
      throw std::invalid_argument("node probability " + std::to_string(j) + " outside [0,1]");
}

/// B_S = B_L diag(p) + B_R diag(1 - p), where p[j] is the probability of
/// taking node j's left branch.
inline Matrix<double> build_fuzzy_matrix(const TreeShape& shape, std::span<const double> p) {
  check_probabilities(p, shape.node_count());
  const BitMatrix left = build_left_matrix(shape);
  const BitMatrix right = build_right_matrix(shape);
  Matrix<double> out(shape.leaf_count(), shape.node_count());
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j)
      // p + (1 - p) is pinned to exactly 1 rather than left to rounding.
      out(i, j) = left(i, j) && right(i, j) ? 1.0 : left(i, j) ? p[j] : 1.0 - p[j];
  return out;
}

/// Copy of `m` with the row of `leaf` set to zero.
inline BitMatrix prune_leaf(const BitMatrix& m, LeafId leaf) {
  if (leaf.position >= m.rows())
    throw std::out_of_range("leaf " + std::to_string(leaf.ordinal()) + " out of range");
  BitMatrix out = m;
  out.fill_row(leaf.position, false);
  return out;
}

enum class MatrixKind { left, right };

/// Rebuilds the tree shape whose left or right matrix is `m`. Throws
/// ModelError when `m` is not such a matrix.
inline TreeShape recover_tree(const BitMatrix& m, MatrixKind kind) {
  const std::size_t n = m.cols();
  if (n == 0 || m.rows() != n + 1)
    throw ModelError("a " + std::to_string(n) + "-column matrix needs " + std::to_string(n + 1) +
                     " rows");
  // Zero set of each column as an interval [a, b).
  std::vector<std::pair<std::size_t, std::size_t>> zeros(n);
  for (std::size_t j = 0; j < n; ++j) {
    const Bitvector col = ~m.column(j);
    const std::size_t a = col.find_first();
    if (a == col.size()) throw ModelError("column " + std::to_string(j) + " has no zero");
    const std::size_t b = col.find_last() + 1;
    if (col.count() != b - a) throw ModelError("zeros of column " + std::to_string(j) + " are not contiguous");
    zeros[j] = {a, b};
  }
  // For a right matrix a node's zeros are its left subtree, which starts where
  // its own interval starts; for a left matrix they are its right subtree,
  // which ends where its interval ends. Index columns by that shared endpoint.
  std::map<std::size_t, std::vector<std::size_t>> by_anchor;
  for (std::size_t j = 0; j < n; ++j)
    by_anchor[kind == MatrixKind::right ? zeros[j].first : zeros[j].second].push_back(j);

  std::vector<Split> splits(n);
  std::vector<bool> used(n, false);
  std::size_t placed = 0;
  // Explicit stack of (interval, parent slot) to keep deep chains off the call stack.
  struct Task {
    std::size_t lo, hi;
    NodeRef* slot;
  };
  NodeRef root;
  std::vector<Task> stack{{0, m.rows(), &root}};
  while (!stack.empty()) {
    const Task t = stack.back();
    stack.pop_back();
    if (t.hi - t.lo == 1) {
      *t.slot = NodeRef::leaf(t.lo);
      continue;
    }
    std::optional<std::size_t> best;
    const auto it = by_anchor.find(kind == MatrixKind::right ? t.lo : t.hi);
    if (it != by_anchor.end())
      for (std::size_t j : it->second) {
        if (used[j]) continue;
        const auto [a, b] = zeros[j];
        const bool inside = kind == MatrixKind::right ? b < t.hi : a > t.lo;
        if (!inside) continue;
        // The root of the interval has the widest proper zero set.
        if (!best || (kind == MatrixKind::right ? b > zeros[*best].second : a < zeros[*best].first))
          best = j;
      }
    if (!best)
      throw ModelError("no column splits leaves " + std::to_string(t.lo + 1) + ".." +
                       std::to_string(t.hi));
    used[*best] = true;
    ++placed;
    *t.slot = NodeRef::internal(*best);
    const std::size_t mid = kind == MatrixKind::right ? zeros[*best].second : zeros[*best].first;
    stack.push_back({mid, t.hi, &splits[*best].right});
    stack.push_back({t.lo, mid, &splits[*best].left});
  }
  if (placed != n || !root.is_node() || root.index != 0)
    throw ModelError("columns do not form a single tree rooted at column 0");
  TreeShape shape(std::move(splits), n + 1);
  if (!validate(shape)) throw ModelError("recovered tree violates numbering: " + validate(shape).to_string());
  const BitMatrix rebuilt =
      kind == MatrixKind::right ? build_right_matrix(shape) : build_left_matrix(shape);
  if (!(rebuilt == m)) throw ModelError("matrix is not realizable by any tree");
  return shape;
}

// ---------------------------------------------------------------------------
// General trees

/// Leaf interval [lo, hi) of every child of every internal node.
inline std::vector<std::vector<std::pair<std::size_t, std::size_t>>> child_intervals(
    const GeneralTree& tree) {
  const std::size_t n = tree.node_count();
  std::vector<std::pair<std::size_t, std::size_t>> whole(n);
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> out(n);
  // Preorder numbering puts children after parents.
  for (std::size_t j = n; j-- > 0;) {
    for (const NodeRef& c : tree.node(j).children)
      out[j].push_back(c.is_leaf() ? std::pair{c.index, c.index + 1} : whole[c.index]);
    whole[j] = {out[j].front().first, out[j].back().second};
  }
  return out;
}

/// Entry (l, n) is the weight of the edge node n uses on the path to leaf l,
/// or 1 when n is not on that path.
inline Matrix<double> build_general_path_matrix(const GeneralTree& tree) {
  const auto spans = child_intervals(tree);
  Matrix<double> out(tree.leaf_count(), tree.node_count(), 1.0);
  for (std::size_t j = 0; j < tree.node_count(); ++j)
    for (std::size_t c = 0; c < spans[j].size(); ++c)
      for (std::size_t l = spans[j][c].first; l < spans[j][c].second; ++l)
        out(l, j) = tree.node(j).weights[c];
  return out;
}

namespace detail {

inline Bitvector mask_from_spans(std::span<const std::pair<std::size_t, std::size_t>> spans,
                                 std::size_t edge, std::size_t leaf_count) {
  Bitvector out(leaf_count, true);
  for (std::size_t c = 0; c < spans.size(); ++c)
    if (c != edge)
      for (std::size_t l = spans[c].first; l < spans[c].second; ++l) out.reset(l);
  return out;
}

}  // namespace detail

/// Zero at every leaf reached from `node` through a child other than `edge`.
inline Bitvector build_mask_vector(const GeneralTree& tree, std::size_t node, std::size_t edge) {
  if (node >= tree.node_count()) throw std::out_of_range("node " + std::to_string(node) + " out of range");
  if (edge >= tree.node(node).children.size())
    throw std::out_of_range("node " + std::to_string(node) + " has no edge " + std::to_string(edge));
  return detail::mask_from_spans(child_intervals(tree)[node], edge, tree.leaf_count());
}

struct DecompositionTerm {
  BitMatrix mask;               // column j = mask of node j's k-th edge
  std::vector<double> weights;  // diagonal; 0 where node j has no k-th edge
};

/// Splits the general path matrix into sum_k mask_k * diag(weights_k), one
/// term per edge slot up to the largest fan-out. A node with fewer edges
/// contributes weight 0 and repeats its last edge's mask.
inline std::vector<DecompositionTerm> decompose_general_matrix(const GeneralTree& tree) {
  const std::size_t k_max = tree.max_fanout();
  const std::size_t n = tree.node_count();
  const auto spans = child_intervals(tree);
  std::vector<DecompositionTerm> out(k_max);
  for (std::size_t k = 0; k < k_max; ++k) {
    out[k].mask = BitMatrix(tree.leaf_count(), n);
    out[k].weights.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const auto& node = tree.node(j);
      const std::size_t edge = std::min(k, node.children.size() - 1);
      const Bitvector col = detail::mask_from_spans(spans[j], edge, tree.leaf_count());
      for (std::size_t l = 0; l < tree.leaf_count(); ++l) out[k].mask.set(l, j, col[l]);
      if (k < node.children.size()) out[k].weights[j] = node.weights[k];
    }
  }
  return out;
}

inline Matrix<double> reconstruct(std::span<const DecompositionTerm> terms) {
  if (terms.empty()) return {};
  Matrix<double> out(terms.front().mask.rows(), terms.front().mask.cols(), 0.0);
  for (const auto& t : terms)
    for (std::size_t i = 0; i < out.rows(); ++i)
      for (std::size_t j = 0; j < out.cols(); ++j)
        if (t.mask(i, j)) out(i, j) += t.weights[j];
  return out;
}

}  // namespace treemat
