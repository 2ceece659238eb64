#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "treemat/bits.hpp"
#include "treemat/distribution.hpp"
#include "treemat/errors.hpp"
#include "treemat/flatten.hpp"
#include "treemat/matrix.hpp"
#include "treemat/tree.hpp"

namespace treemat {

// ---------------------------------------------------------------------------
// Test vectors

/// t in {0,1}^|N|: t_j = 1 iff node j's test is false for the input.
class TestVector {
 public:
  TestVector() = default;
  explicit TestVector(Bitvector false_nodes) : bits_(std::move(false_nodes)) {}

  static TestVector from_values(std::span<const int> t) {
    Bitvector b(t.size());
    for (std::size_t j = 0; j < t.size(); ++j) {
      if (t[j] != 0 && t[j] != 1) throw std::invalid_argument("test vector entries must be 0 or 1");
      b.set(j, t[j] == 1);
    }
    return TestVector(std::move(b));
  }

  std::size_t size() const { return bits_.size(); }
  int operator[](std::size_t j) const { return bits_[j] ? 1 : 0; }
  const Bitvector& false_nodes() const { return bits_; }

  std::vector<int> values() const {
    std::vector<int> out(size());
    for (std::size_t j = 0; j < size(); ++j) out[j] = (*this)[j];
    return out;
  }

  friend bool operator==(const TestVector&, const TestVector&) = default;

 private:
  Bitvector bits_;
};

/// s in {-1,+1}^|N|: s_j = +1 iff node j's test is false. Same storage as
/// TestVector; s = 2t - 1.
class SignedTestVector {
 public:
  SignedTestVector() = default;
  explicit SignedTestVector(Bitvector false_nodes) : bits_(std::move(false_nodes)) {}

  static SignedTestVector from_values(std::span<const int> s) {
    Bitvector b(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (s[j] != 1 && s[j] != -1) throw std::invalid_argument("signed test vector entries must be +1 or -1");
      b.set(j, s[j] == 1);
    }
    return SignedTestVector(std::move(b));
  }

  std::size_t size() const { return bits_.size(); }
  int operator[](std::size_t j) const { return bits_[j] ? 1 : -1; }
  const Bitvector& false_nodes() const { return bits_; }

  std::vector<int> values() const {
    std::vector<int> out(size());
    for (std::size_t j = 0; j < size(); ++j) out[j] = (*this)[j];
    return out;
  }

  friend bool operator==(const SignedTestVector&, const SignedTestVector&) = default;

 private:
  Bitvector bits_;
};

inline TestVector compute_test_vector(const BinaryDecisionTree& tree, std::span<const double> x) {
  check_dimension(tree, x);
  Bitvector b(tree.node_count());
  for (std::size_t j = 0; j < tree.node_count(); ++j)
    if (!tree.test(j)(x)) b.set(j);
  return TestVector(std::move(b));
}

inline SignedTestVector signed_test_vector(const TestVector& t) {
  return SignedTestVector(t.false_nodes());
}

/// (s + 1) / 2
inline TestVector unsigned_test_vector(const SignedTestVector& s) {
  return TestVector(s.false_nodes());
}

/// Signed test vector from a stacked linear hash: row j of `weights` and
/// gamma[j] form node j's test. sgn(Wx - gamma) marks true tests with +1, so
/// it is negated here to keep +1 meaning "false". Zero counts as false.
inline SignedTestVector linear_hash_test_vector(const Matrix<double>& weights,
                                                std::span<const double> gamma,
                                                std::span<const double> x) {
  if (gamma.size() != weights.rows())
    throw DimensionError("threshold vector length differs from the number of hash rows");
  if (x.size() != weights.cols())
    throw DimensionError("feature vector length differs from the hash width");
  Bitvector b(weights.rows());
  for (std::size_t j = 0; j < weights.rows(); ++j) {
    double acc = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) acc += weights(j, k) * x[k];
    const int raw = acc - gamma[j] > 0.0 ? 1 : -1;
    b.set(j, -raw == 1);
  }
  return SignedTestVector(std::move(b));
}

// ---------------------------------------------------------------------------
// Flattened tree

/// A tree together with every matrix the traversal algorithms read.
struct FlattenedTree {
  BinaryDecisionTree tree;
  BitMatrix right;
  BitMatrix left;
  std::vector<Bitvector> right_columns;
  std::vector<Bitvector> left_columns;
  SignedPathMatrix signed_matrix;
  std::vector<int> depth;

  std::size_t node_count() const { return tree.node_count(); }
  std::size_t leaf_count() const { return tree.leaf_count(); }
};

/// Builds all matrices of a valid tree. Throws ModelError on an invalid one.
inline FlattenedTree flatten(BinaryDecisionTree tree) {
  if (auto report = validate(tree); !report) throw ModelError(report.to_string());
  FlattenedTree f;
  f.right = build_right_matrix(tree.shape());
  f.left = build_left_matrix(tree.shape());
  f.right_columns = f.right.columns();
  f.left_columns = f.left.columns();
  f.signed_matrix = signed_difference(f.right, f.left);
  f.depth = build_depth_vector(tree.shape());
  f.tree = std::move(tree);
  return f;
}

enum class Scores { omit, keep };

struct TraversalResult {
  LeafId leaf;
  double value = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> scores;  // the algorithm's result vector, when kept
  std::size_t steps = 0;       // nodes or leaves examined, where meaningful
};

namespace detail {

inline TraversalResult finish(const FlattenedTree& f, std::size_t position) {
  TraversalResult r;
  r.leaf = {position};
  if (position < f.leaf_count()) r.value = f.tree.leaf_values()[position];
  return r;
}

template <class Fn>
void for_each_set_bit(const Bitvector& v, Fn&& fn) {
  const auto words = v.words();
  for (std::size_t w = 0; w < words.size(); ++w)
    for (auto bits = words[w]; bits != 0; bits &= bits - 1)
      fn(w * Bitvector::word_bits + static_cast<std::size_t>(std::countr_zero(bits)));
}

// Leftmost index maximizing num[i] / den[i] (den > 0), compared exactly.
inline std::size_t fraction_argmax(std::span<const long> num, std::span<const long> den) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < num.size(); ++i)
    if (static_cast<__int128>(num[i]) * den[best] > static_cast<__int128>(num[best]) * den[i]) best = i;
  return best;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Bitwise algorithms

/// AND the right bitvectors of all false nodes into an all-ones vector; the
/// exit leaf is the leftmost surviving bit.
inline TraversalResult quickscorer_traverse(const FlattenedTree& f, const TestVector& t,
                                            Scores keep = Scores::omit) {
  Bitvector v(f.leaf_count(), true);
  std::size_t steps = 0;
  detail::for_each_set_bit(t.false_nodes(), [&](std::size_t j) {
    v &= f.right_columns[j];
    ++steps;
  });
  auto r = detail::finish(f, v.find_first());
  r.steps = steps;
  if (keep == Scores::keep)
    for (std::size_t i = 0; i < v.size(); ++i) r.scores.push_back(v[i] ? 1.0 : 0.0);
  return r;
}

/// Visits nodes breadth-first, ANDing the left bitvector of true nodes and
/// the right bitvector of false nodes, and stops once one candidate is left.
inline TraversalResult dual_traverse(const FlattenedTree& f, const TestVector& t,
                                     Scores keep = Scores::omit) {
  Bitvector v(f.leaf_count(), true);
  std::size_t steps = 0;
  for (std::size_t j = 0; j < f.node_count(); ++j) {
    v &= t[j] ? f.right_columns[j] : f.left_columns[j];
    ++steps;
    if (v.count() == 1) break;
  }
  auto r = detail::finish(f, v.count() == 1 ? v.find_first() : v.size());
  r.steps = steps;
  if (keep == Scores::keep)
    for (std::size_t i = 0; i < v.size(); ++i) r.scores.push_back(v[i] ? 1.0 : 0.0);
  return r;
}

// ---------------------------------------------------------------------------
// Arithmetic algorithms

/// v = B_R t + 1.
inline std::vector<long> right_product_plus_one(const FlattenedTree& f, const TestVector& t) {
  std::vector<long> v(f.leaf_count());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = static_cast<long>(f.right.row_dot(i, t.false_nodes())) + 1;
  return v;
}

/// v = B_R t + 1, exit leaf = argmax of diag(w) v with w_i = 1 - i/K
/// (i 0-based, K = (|N|+1)|L|). The weights are close enough to 1 that they
/// only break ties, and strictly decreasing so the leftmost maximum wins.
/// Compared exactly as v_i (K - i).
inline TraversalResult matrix_traverse(const FlattenedTree& f, const TestVector& t,
                                       Scores keep = Scores::omit) {
  const auto v = right_product_plus_one(f, t);
  const long k = static_cast<long>((f.node_count() + 1) * f.leaf_count());
  std::size_t best = 0;
  long best_score = v[0] * k;
  for (std::size_t i = 1; i < v.size(); ++i) {
    const long score = v[i] * (k - static_cast<long>(i));
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  auto r = detail::finish(f, best);
  if (keep == Scores::keep)
    for (std::size_t i = 0; i < v.size(); ++i)
      r.scores.push_back(static_cast<double>(v[i]) * (1.0 - static_cast<double>(i) / static_cast<double>(k)));
  return r;
}

/// Same v = B_R t + 1, leftmost maximum found by a plain scan.
inline TraversalResult matrix_traverse_scan(const FlattenedTree& f, const TestVector& t) {
  const auto v = right_product_plus_one(f, t);
  return detail::finish(f, static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin()));
}

/// v = B_R t + B_L (1 - t); the exit leaf is the unique entry equal to |N|.
inline TraversalResult dual_matrix_traverse(const FlattenedTree& f, const TestVector& t,
                                            Scores keep = Scores::omit) {
  const Bitvector& fal = t.false_nodes();
  std::size_t best = 0;
  long best_v = std::numeric_limits<long>::min();
  std::vector<double> scores;
  for (std::size_t i = 0; i < f.leaf_count(); ++i) {
    const long right = static_cast<long>(f.right.row_dot(i, fal));
    const long left = static_cast<long>(f.left.row_count(i)) - static_cast<long>(f.left.row_dot(i, fal));
    const long v = right + left;
    if (keep == Scores::keep) scores.push_back(static_cast<double>(v));
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  auto r = detail::finish(f, best);
  r.scores = std::move(scores);
  return r;
}

struct Fraction {
  long num = 0;
  long den = 1;

  friend bool operator==(const Fraction&, const Fraction&) = default;
};

/// D^-1 P s as reduced fractions.
inline std::vector<Fraction> sign_scores(const FlattenedTree& f, const SignedTestVector& s) {
  std::vector<Fraction> out(f.leaf_count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const long num = f.signed_matrix.signed_dot(i, s.false_nodes());
    const long den = f.depth[i];
    const long g = std::gcd(num, den);
    out[i] = {num / g, den / g};
  }
  return out;
}

/// v = D^-1 P s; the exit leaf is its argmax, where v equals exactly 1.
/// Numerators <P_i, s> and denominators d_i stay integers.
inline TraversalResult sign_traverse(const FlattenedTree& f, const SignedTestVector& s,
                                     Scores keep = Scores::omit) {
  std::vector<long> num(f.leaf_count());
  std::vector<long> den(f.depth.begin(), f.depth.end());
  for (std::size_t i = 0; i < num.size(); ++i) num[i] = f.signed_matrix.signed_dot(i, s.false_nodes());
  auto r = detail::finish(f, detail::fraction_argmax(num, den));
  if (keep == Scores::keep)
    for (std::size_t i = 0; i < num.size(); ++i)
      r.scores.push_back(static_cast<double>(num[i]) / static_cast<double>(den[i]));
  return r;
}

/// Scans leaves left to right and returns the first whose codeword P_i
/// matches s on every nonzero position: <P_i, s> / <P_i, P_i> = 1.
inline TraversalResult ecoc_traverse(const FlattenedTree& f, const SignedTestVector& s) {
  for (std::size_t i = 0; i < f.leaf_count(); ++i) {
    if (f.signed_matrix.signed_dot(i, s.false_nodes()) == f.signed_matrix.row_norm(i)) {
      auto r = detail::finish(f, i);
      r.steps = i + 1;
      return r;
    }
  }
  auto r = detail::finish(f, f.leaf_count());
  r.steps = f.leaf_count();
  return r;
}

/// v = P s - d; returns sum_i delta(v_i) l_i.val with delta(0) = 1 and 0
/// otherwise. The leaf ordinal is sum_i delta(v_i) i.
inline TraversalResult delta_traverse(const FlattenedTree& f, const SignedTestVector& s,
                                      Scores keep = Scores::omit) {
  double value = 0.0;
  std::size_t ordinal = 0;
  std::vector<double> scores;
  for (std::size_t i = 0; i < f.leaf_count(); ++i) {
    const long v = f.signed_matrix.signed_dot(i, s.false_nodes()) - f.depth[i];
    if (keep == Scores::keep) scores.push_back(static_cast<double>(v));
    if (v == 0) {
      value += f.tree.leaf_values()[i];
      ordinal += i + 1;
    }
  }
  TraversalResult r;
  r.leaf = LeafId::from_ordinal(ordinal);
  r.value = value;
  r.scores = std::move(scores);
  return r;
}

/// softmax(D^-1 P s).
inline LeafDistribution soft_attention(const FlattenedTree& f, const SignedTestVector& s) {
  std::vector<double> v(f.leaf_count());
  for (std::size_t i = 0; i < v.size(); ++i)
    v[i] = static_cast<double>(f.signed_matrix.signed_dot(i, s.false_nodes())) / f.depth[i];
  const double top = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (auto& x : v) sum += (x = std::exp(x - top));
  for (auto& x : v) x /= sum;
  return {std::move(v), false};
}

/// Checks that positive column scaling keeps the leftmost argmax of
/// sum_j t_j scale_j B_j + 1 at matrix_traverse's leaf, and that replacing the
/// zeros of B_R by -1 leaves the argmax set of B_R t unchanged.
inline bool scaled_argmax_invariance_check(const FlattenedTree& f, const TestVector& t,
                                           std::span<const double> scale) {
  if (scale.size() != f.node_count()) throw DimensionError("one scale per internal node expected");
  for (double c : scale)
    if (!(c > 0.0)) throw std::invalid_argument("scales must be positive");

  const std::size_t rows = f.leaf_count();
  std::vector<double> scaled(rows, 1.0);
  std::vector<long> plain(rows, 0), signed_sum(rows, 0);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < f.node_count(); ++j) {
      if (t[j] == 0) continue;
      const bool bit = f.right(i, j);
      if (bit) {
        scaled[i] += scale[j];
        plain[i] += 1;
      }
      signed_sum[i] += bit ? 1 : -1;
    }
  const auto leftmost =
      static_cast<std::size_t>(std::max_element(scaled.begin(), scaled.end()) - scaled.begin());
  if (leftmost != matrix_traverse(f, t).leaf.position) return false;

  const long top_plain = *std::max_element(plain.begin(), plain.end());
  const long top_signed = *std::max_element(signed_sum.begin(), signed_sum.end());
  for (std::size_t i = 0; i < rows; ++i)
    if ((plain[i] == top_plain) != (signed_sum[i] == top_signed)) return false;
  return true;
}

/// Rows of D^-1 P: each leaf's representation vector divided by its depth.
inline Matrix<double> normalized_leaf_vectors(const FlattenedTree& f) {
  Matrix<double> out(f.leaf_count(), f.node_count());
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j)
      out(i, j) = static_cast<double>(f.signed_matrix(i, j)) / f.depth[i];
  return out;
}

/// Exact maximum inner product search over `keys`; leftmost on ties.
inline LeafId mips_leaf_search(const Matrix<double>& keys, const SignedTestVector& query) {
  if (keys.cols() != query.size()) throw DimensionError("query length differs from key width");
  std::size_t best = 0;
  double best_ip = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < keys.rows(); ++i) {
    double ip = 0.0;
    const auto row = keys.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) ip += row[j] * query[j];
    if (ip > best_ip) {
      best_ip = ip;
      best = i;
    }
  }
  return {best};
}

// ---------------------------------------------------------------------------
// Dispatch and ensembles

enum class Algorithm { naive, quickscorer, dual, matrix, dual_matrix, sign, ecoc, delta };

inline constexpr std::array<Algorithm, 8> all_algorithms{
    Algorithm::naive, Algorithm::quickscorer, Algorithm::dual, Algorithm::matrix,
    Algorithm::dual_matrix, Algorithm::sign, Algorithm::ecoc, Algorithm::delta};

inline constexpr std::string_view algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::naive: return "naive";
    case Algorithm::quickscorer: return "qs";
    case Algorithm::dual: return "dual";
    case Algorithm::matrix: return "matrix";
    case Algorithm::dual_matrix: return "dualmatrix";
    case Algorithm::sign: return "sign";
    case Algorithm::ecoc: return "ecoc";
    case Algorithm::delta: return "delta";
  }
  return "?";
}

inline std::optional<Algorithm> parse_algorithm(std::string_view name) {
  for (Algorithm a : all_algorithms)
    if (algorithm_name(a) == name) return a;
  return std::nullopt;
}

/// Scores one instance with the chosen algorithm, test vector included.
inline TraversalResult traverse(const FlattenedTree& f, std::span<const double> x, Algorithm a) {
  switch (a) {
    case Algorithm::naive: return detail::finish(f, naive_traverse(f.tree, x).position);
    case Algorithm::quickscorer: return quickscorer_traverse(f, compute_test_vector(f.tree, x));
    case Algorithm::dual: return dual_traverse(f, compute_test_vector(f.tree, x));
    case Algorithm::matrix: return matrix_traverse(f, compute_test_vector(f.tree, x));
    case Algorithm::dual_matrix: return dual_matrix_traverse(f, compute_test_vector(f.tree, x));
    case Algorithm::sign:
      return sign_traverse(f, signed_test_vector(compute_test_vector(f.tree, x)));
    case Algorithm::ecoc:
      return ecoc_traverse(f, signed_test_vector(compute_test_vector(f.tree, x)));
    case Algorithm::delta:
      return delta_traverse(f, signed_test_vector(compute_test_vector(f.tree, x)));
  }
  throw std::invalid_argument("unknown algorithm");
}

/// Sum of the selected leaf values over all trees, in tree order.
inline double ensemble_score(std::span<const FlattenedTree> trees, std::span<const double> x,
                             Algorithm a) {
  double total = 0.0;
  for (const auto& f : trees) total += traverse(f, x, a).value;
  return total;
}

inline double ensemble_score(std::span<const FlattenedTree> trees, std::span<const double> x,
                             std::string_view algorithm) {
  const auto a = parse_algorithm(algorithm);
  if (!a) throw std::invalid_argument("unknown algorithm '" + std::string(algorithm) + "'");
  return ensemble_score(trees, x, *a);
}

}  // namespace treemat
