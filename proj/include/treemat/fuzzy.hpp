#pragma once

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "treemat/distribution.hpp"
#include "treemat/flatten.hpp"
#include "treemat/matrix.hpp"
#include "treemat/traversal.hpp"
#include "treemat/tree.hpp"

namespace treemat {

/// Row products of a fuzzy or general path matrix: the probability of
/// reaching each leaf.
inline LeafDistribution leaf_probabilities(const Matrix<double>& m) {
  LeafDistribution out;
  out.probs.resize(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double p = 1.0;
    bool has_zero = false;
    for (double x : m.row(i)) {
      p *= x;
      has_zero = has_zero || x == 0.0;
    }
    if (!has_zero && p < DBL_MIN) {
      p = 0.0;
      out.underflow = true;
    }
    out.probs[i] = p;
  }
  return out;
}

/// exp(ln(m) 1): the same row products through a sum of logarithms. Every
/// entry must be strictly positive.
inline LeafDistribution leaf_probabilities_log(const Matrix<double>& m) {
  LeafDistribution out;
  out.probs.resize(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const double x = m(i, j);
      if (!(x > 0.0))
        throw std::domain_error("entry (" + std::to_string(i + 1) + ", " + std::to_string(j + 1) +
                                ") = " + std::to_string(x) + " is not positive");
      acc += std::log(x);
    }
    out.probs[i] = std::exp(acc);
  }
  return out;
}

/// Binary tree shape with a left-branch probability per internal node.
struct FuzzyTree {
  TreeShape shape;
  std::vector<double> left_probability;
  std::vector<double> leaf_values;
};

inline LeafDistribution leaf_probabilities(const FuzzyTree& t) {
  return leaf_probabilities(build_fuzzy_matrix(t.shape, t.left_probability));
}

/// Replaces each k-ary node by a chain of k-1 binary nodes. Chain node m
/// splits child m off to the left with probability w_m / (w_m + ... + w_k),
/// so the product along every path equals the original edge weight. When
/// the remaining mass is zero the chain splits uniformly instead; those
/// leaves carry no probability either way.
inline FuzzyTree convert_general_to_binary(const GeneralTree& tree) {
  if (auto report = validate(tree); !report) throw ModelError(report.to_string());
  std::vector<Split> splits;
  std::vector<double> prob;

  auto convert = [&](auto& self, NodeRef r) -> NodeRef {
    if (r.is_leaf()) return r;
    const auto& node = tree.node(r.index);
    const std::size_t k = node.children.size();
    // Allocate the chain first so it is numbered top-down before the
    // canonical renumbering.
    const std::size_t first = splits.size();
    splits.resize(first + k - 1);
    prob.resize(first + k - 1);
    std::vector<double> tail(k + 1, 0.0);
    for (std::size_t m = k; m-- > 0;) tail[m] = tail[m + 1] + node.weights[m];
    for (std::size_t m = 0; m + 1 < k; ++m) {
      const double p = tail[m] > 0.0 ? node.weights[m] / tail[m] : 1.0 / static_cast<double>(k - m);
      prob[first + m] = std::clamp(p, 0.0, 1.0);
      const NodeRef left = self(self, node.children[m]);
      const NodeRef right =
          m + 2 < k ? NodeRef::internal(first + m + 1) : self(self, node.children[k - 1]);
      splits[first + m] = {left, right};
    }
    return NodeRef::internal(first);
  };
  const NodeRef root = convert(convert, tree.root());
  auto order = canonicalize(splits, tree.leaf_count(), root);
  FuzzyTree out;
  out.left_probability.resize(order.node_from.size());
  for (std::size_t k = 0; k < order.node_from.size(); ++k)
    out.left_probability[k] = prob[order.node_from[k]];
  out.leaf_values.resize(tree.leaf_count());
  for (std::size_t k = 0; k < order.leaf_from.size(); ++k)
    out.leaf_values[k] = tree.leaf_values()[order.leaf_from[k]];
  out.shape = std::move(order.shape);
  return out;
}

/// The binary tree as a general tree whose node j has edge weights
/// (p_j, 1 - p_j). Nodes come back in preorder.
inline GeneralTree as_general_tree(const TreeShape& shape, std::span<const double> p,
                                   std::span<const double> leaf_values = {}) {
  check_probabilities(p, shape.node_count());
  GeneralTreeBuilder b;
  std::vector<NodeRef> leaves;
  for (std::size_t i = 0; i < shape.leaf_count(); ++i)
    leaves.push_back(b.add_leaf(leaf_values.empty() ? 0.0 : leaf_values[i]));
  std::vector<NodeRef> nodes(shape.node_count());
  auto ref = [&](NodeRef r) { return r.is_leaf() ? leaves[r.index] : nodes[r.index]; };
  for (std::size_t j = shape.node_count(); j-- > 0;)
    nodes[j] = b.add_node({ref(shape.left(j)), ref(shape.right(j))}, {p[j], 1.0 - p[j]});
  return b.build(nodes.empty() ? NodeRef::leaf(0) : nodes[0]);
}

/// Hard tests as degenerate probabilities (1 for a true node, 0 for a false
/// one): the resulting leaf distribution must be the indicator of the
/// recursive traversal's exit leaf.
inline bool hard_routing_consistency(const BinaryDecisionTree& tree, std::span<const double> x) {
  const TestVector t = compute_test_vector(tree, x);
  std::vector<double> p(tree.node_count());
  for (std::size_t j = 0; j < p.size(); ++j) p[j] = t[j] ? 0.0 : 1.0;
  const auto dist = leaf_probabilities(build_fuzzy_matrix(tree.shape(), p));
  const LeafId exit = naive_traverse(tree, x);
  for (std::size_t i = 0; i < dist.size(); ++i)
    if (dist[i] != (i == exit.position ? 1.0 : 0.0)) return false;
  return true;
}

}  // namespace treemat
