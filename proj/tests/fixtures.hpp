#pragma once

// Trees from the worked examples and independent oracles shared by the unit
// tests and the acceptance binary. Nothing here calls the matrix builders.

#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "treemat/treemat.hpp"

namespace fixtures {

using namespace treemat;
using IntRows = std::vector<std::vector<int>>;

inline std::string data_path(const std::string& name) { return std::string(TREEMAT_DATA) + "/" + name; }

// Node j tests x[j] > 0.5; leaf k (1-based) carries value k.
inline BinaryDecisionTree fig1_tree() {
  BinaryTreeBuilder b;
  auto test = [](std::size_t j) { return Predicate::axis(j, 5, 0.5); };
  std::vector<NodeRef> v;
  for (int k = 1; k <= 6; ++k) v.push_back(b.add_leaf(k));
  const NodeRef n4 = b.add_node(test(4), v[4], v[5]);
  const NodeRef n3 = b.add_node(test(3), v[2], v[3]);
  const NodeRef n2 = b.add_node(test(2), n3, n4);
  const NodeRef n1 = b.add_node(test(1), v[0], v[1]);
  const NodeRef n0 = b.add_node(test(0), n1, n2);
  return b.build(n0, 5);
}

// Test outcome per node -> instance: true tests get 0.9, false tests 0.1.
inline std::vector<double> fig1_instance(const std::vector<bool>& node_true) {
  std::vector<double> x;
  for (bool t : node_true) x.push_back(t ? 0.9 : 0.1);
  return x;
}

inline const IntRows fig1_right{{0, 0, 1, 1, 1}, {0, 1, 1, 1, 1}, {1, 1, 0, 0, 1},
                                {1, 1, 0, 1, 1}, {1, 1, 1, 1, 0}, {1, 1, 1, 1, 1}};
inline const IntRows fig1_left{{1, 1, 1, 1, 1}, {1, 0, 1, 1, 1}, {0, 1, 1, 1, 1},
                               {0, 1, 1, 0, 1}, {0, 1, 0, 1, 1}, {0, 1, 0, 1, 0}};
inline const IntRows fig1_left_complement{{0, 0, 0, 0, 0}, {0, 1, 0, 0, 0}, {1, 0, 0, 0, 0},
                                          {1, 0, 0, 1, 0}, {1, 0, 1, 0, 0}, {1, 0, 1, 0, 1}};
inline const IntRows fig1_right_complement{{1, 1, 0, 0, 0}, {1, 0, 0, 0, 0}, {0, 0, 1, 1, 0},
                                           {0, 0, 1, 0, 0}, {0, 0, 0, 0, 1}, {0, 0, 0, 0, 0}};
inline const IntRows fig1_signed{{-1, -1, 0, 0, 0}, {-1, 1, 0, 0, 0}, {1, 0, -1, -1, 0},
                                 {1, 0, -1, 1, 0},   {1, 0, 1, 0, -1}, {1, 0, 1, 0, 1}};
inline const std::vector<int> fig1_depth{2, 2, 3, 3, 3, 3};

inline BinaryDecisionTree depth1_tree() {
  BinaryTreeBuilder b;
  const NodeRef l = b.add_leaf(-1.0), r = b.add_leaf(1.0);
  return b.build(b.add_node(Predicate::axis(0, 1, 0.5), l, r), 1);
}

// Weighted general tree: n0 -> (n1, l4, n3), n1 -> (l1, n2), n2 -> (l2, l3),
// n3 -> (l5, n4, l8), n4 -> (l6, l7). Edge weights in node order.
struct Fig3Weights {
  std::vector<double> n0{0.2, 0.3, 0.5}, n1{0.4, 0.6}, n2{0.7, 0.3}, n3{0.1, 0.6, 0.3}, n4{0.25, 0.75};
};

inline GeneralTree fig3_tree(const Fig3Weights& w = {}) {
  GeneralTreeBuilder b;
  std::vector<NodeRef> l;
  for (int k = 1; k <= 8; ++k) l.push_back(b.add_leaf(k));
  const NodeRef n2 = b.add_node({l[1], l[2]}, w.n2);
  const NodeRef n1 = b.add_node({l[0], n2}, w.n1);
  const NodeRef n4 = b.add_node({l[5], l[6]}, w.n4);
  const NodeRef n3 = b.add_node({l[4], n4, l[7]}, w.n3);
  const NodeRef n0 = b.add_node({n1, l[3], n3}, w.n0);
  return b.build(n0, 1);
}

template <class M>
IntRows to_rows(const M& m) {
  IntRows out(m.rows(), std::vector<int>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = static_cast<int>(m(i, j));
  return out;
}

// ---------------------------------------------------------------------------
// Structural oracles: explicit recursive walks over the tree.

inline void collect_leaves(const TreeShape& s, NodeRef r, std::vector<std::size_t>& out) {
  if (r.is_leaf()) {
    out.push_back(r.index);
    return;
  }
  collect_leaves(s, s.left(r.index), out);
  collect_leaves(s, s.right(r.index), out);
}

inline std::set<std::size_t> leaves_under(const TreeShape& s, NodeRef r) {
  std::vector<std::size_t> v;
  collect_leaves(s, r, v);
  return {v.begin(), v.end()};
}

// Per leaf: the (node, went_left) pairs on its root path.
inline std::vector<std::vector<std::pair<std::size_t, bool>>> leaf_paths(const TreeShape& s) {
  std::vector<std::vector<std::pair<std::size_t, bool>>> out(s.leaf_count());
  std::vector<std::pair<std::size_t, bool>> path;
  std::function<void(NodeRef)> go = [&](NodeRef r) {
    if (r.is_leaf()) {
      out[r.index] = path;
      return;
    }
    path.push_back({r.index, true});
    go(s.left(r.index));
    path.back().second = false;
    go(s.right(r.index));
    path.pop_back();
  };
  go(s.root());
  return out;
}

// Leaf whose path conditions all hold for outcome vector `node_true`.
inline std::vector<std::size_t> matching_leaves(const TreeShape& s, const std::vector<bool>& node_true) {
  std::vector<std::size_t> out;
  const auto paths = leaf_paths(s);
  for (std::size_t i = 0; i < paths.size(); ++i) {
    bool ok = true;
    for (auto [node, left] : paths[i]) ok = ok && node_true[node] == left;
    if (ok) out.push_back(i);
  }
  return out;
}

inline std::vector<bool> outcomes(const BinaryDecisionTree& t, std::span<const double> x) {
  std::vector<bool> out;
  for (std::size_t j = 0; j < t.node_count(); ++j) {
    double acc = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) acc += t.test(j).weights()[k] * x[k];
    out.push_back(acc > t.test(j).threshold());
  }
  return out;
}

// Product of edge weights along every root-to-leaf path of a general tree.
inline std::vector<double> general_path_products(const GeneralTree& g) {
  std::vector<double> out(g.leaf_count(), 0.0);
  std::function<void(NodeRef, double)> go = [&](NodeRef r, double acc) {
    if (r.is_leaf()) {
      out[r.index] = acc;
      return;
    }
    const auto& n = g.node(r.index);
    for (std::size_t c = 0; c < n.children.size(); ++c) go(n.children[c], acc * n.weights[c]);
  };
  go(g.root(), 1.0);
  return out;
}

// Empirical leaf frequencies of random root-to-leaf walks, left with p[j].
inline std::vector<double> sample_walks(const TreeShape& s, std::span<const double> p, std::size_t draws,
                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> freq(s.leaf_count(), 0.0);
  for (std::size_t k = 0; k < draws; ++k) {
    NodeRef at = s.root();
    while (at.is_node()) at = unit(rng) < p[at.index] ? s.left(at.index) : s.right(at.index);
    freq[at.index] += 1.0;
  }
  for (auto& f : freq) f /= static_cast<double>(draws);
  return freq;
}

// Rank over the rationals by plain Gaussian elimination on exact fractions.
inline std::size_t rational_rank(const IntRows& rows) {
  using Q = boost::multiprecision::cpp_rational;
  if (rows.empty()) return 0;
  std::vector<std::vector<Q>> a;
  for (const auto& r : rows) a.emplace_back(r.begin(), r.end());
  const std::size_t m = a.size(), n = a[0].size();
  std::size_t rank = 0;
  for (std::size_t c = 0; c < n && rank < m; ++c) {
    std::size_t pivot = rank;
    while (pivot < m && a[pivot][c] == 0) ++pivot;
    if (pivot == m) continue;
    std::swap(a[pivot], a[rank]);
    for (std::size_t r = rank + 1; r < m; ++r) {
      if (a[r][c] == 0) continue;
      const Q f = a[r][c] / a[rank][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[rank][k];
    }
    ++rank;
  }
  return rank;
}

// ---------------------------------------------------------------------------
// Enumeration

// Every full binary tree shape with `n` internal nodes, as builder input.
inline std::vector<BinaryDecisionTree> all_trees(std::size_t n) {
  std::function<std::vector<std::vector<std::pair<int, int>>>(std::size_t)> shapes =
      [&](std::size_t k) -> std::vector<std::vector<std::pair<int, int>>> {
    // Each shape is a preorder list of nodes; -1 marks a leaf child.
    if (k == 0) return {{}};
    std::vector<std::vector<std::pair<int, int>>> out;
    for (std::size_t left = 0; left < k; ++left) {
      for (const auto& l : shapes(left)) {
        for (const auto& r : shapes(k - 1 - left)) {
          std::vector<std::pair<int, int>> s{{l.empty() ? -1 : 1, 0}};
          for (auto [a, b] : l) s.push_back({a < 0 ? -1 : a + 1, b < 0 ? -1 : b + 1});
          const int off = static_cast<int>(1 + l.size());
          s[0].second = r.empty() ? -1 : off;
          for (auto [a, b] : r) s.push_back({a < 0 ? -1 : a + off, b < 0 ? -1 : b + off});
          out.push_back(std::move(s));
        }
      }
    }
    return out;
  };
  std::vector<BinaryDecisionTree> out;
  for (const auto& s : shapes(n)) {
    BinaryTreeBuilder b;
    std::function<NodeRef(int)> make = [&](int idx) -> NodeRef {
      if (idx < 0) return b.add_leaf(0.0);
      const NodeRef l = make(s[idx].first);
      const NodeRef r = make(s[idx].second);
      return b.add_node(Predicate::axis(0, std::max<std::size_t>(n, 1), 0.5), l, r);
    };
    out.push_back(b.build(make(0), std::max<std::size_t>(n, 1)));
  }
  // Tests and leaf values follow the canonical numbering.
  for (auto& t : out) {
    std::vector<Predicate> tests;
    for (std::size_t j = 0; j < n; ++j) tests.push_back(Predicate::axis(j, n, 0.5));
    std::vector<double> values;
    for (std::size_t i = 0; i < t.leaf_count(); ++i) values.push_back(static_cast<double>(i + 1));
    t = BinaryDecisionTree(t.shape(), std::move(tests), std::move(values), n);
  }
  return out;
}

inline TestVector test_vector_from_mask(std::uint64_t mask, std::size_t n) {
  Bitvector b(n);
  for (std::size_t j = 0; j < n; ++j) b.set(j, (mask >> j) & 1U);
  return TestVector(std::move(b));
}

}  // namespace fixtures
