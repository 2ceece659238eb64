#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "treemat/distribution.hpp"
#include "treemat/errors.hpp"
#include "treemat/flatten.hpp"
#include "treemat/matrix.hpp"
#include "treemat/tree.hpp"

namespace treemat {

using AnyTree = std::variant<BinaryDecisionTree, GeneralTree>;

/// Contents of a tree file: one tree, or an ensemble of trees.
struct Model {
  std::size_t feature_dim = 0;
  bool ensemble = false;
  std::vector<AnyTree> trees;

  bool all_binary() const {
    for (const auto& t : trees)
      if (!std::holds_alternative<BinaryDecisionTree>(t)) return false;
    return true;
  }
};

inline std::string format_number(double v, int digits = 12) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

namespace detail {

using json = nlohmann::json;

inline const json& require(const json& j, const char* key, const char* what) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string(what) + " is missing \"" + key + "\"");
  return *it;
}

inline double number(const json& j, const char* what) {
  if (!j.is_number()) throw ParseError(std::string(what) + " must be a number");
  return j.get<double>();
}

inline std::vector<double> numbers(const json& j, const char* what) {
  if (!j.is_array()) throw ParseError(std::string(what) + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& x : j) out.push_back(number(x, what));
  return out;
}

inline std::size_t count_field(const json& j, const char* what) {
  if (!j.is_number_integer() || j.get<long long>() < 0)
    throw ParseError(std::string(what) + " must be a nonnegative integer");
  return j.get<std::size_t>();
}

// Reads a binary tree; nodes and leaves are collected in document order and
// renumbered afterwards. Optional "id" fields are checked against the
// canonical numbering (0-based breadth-first for nodes, 1-based for leaves).
class BinaryReader {
 public:
  explicit BinaryReader(std::size_t dim) : dim_(dim) {}

  BinaryDecisionTree read(const json& root) {
    const NodeRef r = node(root);
    if (!r.is_node()) throw ModelError("tree has no internal node");
    auto order = canonicalize(splits_, leaf_values_.size(), r);
    std::vector<Predicate> tests(order.node_from.size());
    for (std::size_t k = 0; k < tests.size(); ++k) {
      const std::size_t old = order.node_from[k];
      if (auto it = node_ids_.find(old); it != node_ids_.end() && it->second != k)
        throw ModelError("node id " + std::to_string(it->second) + " does not match breadth-first position " +
                         std::to_string(k));
      tests[k] = std::move(tests_[old]);
    }
    std::vector<double> values(order.leaf_from.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
      const std::size_t old = order.leaf_from[k];
      if (auto it = leaf_ids_.find(old); it != leaf_ids_.end() && it->second != k + 1)
        throw ModelError("leaf id " + std::to_string(it->second) + " does not match left-to-right position " +
                         std::to_string(k + 1));
      values[k] = leaf_values_[old];
    }
    BinaryDecisionTree tree(std::move(order.shape), std::move(tests), std::move(values), dim_);
    if (auto report = validate(tree); !report) throw ModelError(report.to_string());
    return tree;
  }

 private:
  NodeRef node(const json& j) {
    if (!j.is_object()) throw ParseError("tree node must be an object");
    if (j.contains("leaf")) {
      leaf_values_.push_back(number(j["leaf"], "leaf value"));
      const std::size_t idx = leaf_values_.size() - 1;
      if (j.contains("id")) leaf_ids_[idx] = count_field(j["id"], "leaf id");
      return NodeRef::leaf(idx);
    }
    if (j.contains("children")) throw ModelError("general node inside a binary tree");
    const double threshold = number(require(j, "threshold", "binary node"), "threshold");
    std::vector<double> weights;
    if (j.contains("weights")) {
      weights = numbers(j["weights"], "weights");
      if (weights.size() != dim_)
        throw ModelError("node has " + std::to_string(weights.size()) + " weights, feature_dim is " +
                         std::to_string(dim_));
    } else {
      const std::size_t f = count_field(require(j, "feature", "binary node"), "feature");
      if (f >= dim_)
        throw ModelError("feature " + std::to_string(f) + " out of range for feature_dim " + std::to_string(dim_));
      weights.assign(dim_, 0.0);
      weights[f] = 1.0;
    }
    const std::size_t idx = splits_.size();
    splits_.emplace_back();
    tests_.emplace_back(std::move(weights), threshold);
    if (j.contains("id")) node_ids_[idx] = count_field(j["id"], "node id");
    const bool has_left = j.contains("left"), has_right = j.contains("right");
    if (!has_left || !has_right)
      throw ModelError(std::string("binary node is missing its ") + (has_left ? "right" : "left") + " child");
    const NodeRef left = node(j["left"]);
    const NodeRef right = node(j["right"]);
    splits_[idx] = {left, right};
    return NodeRef::internal(idx);
  }

  std::size_t dim_;
  std::vector<Split> splits_;
  std::vector<Predicate> tests_;
  std::vector<double> leaf_values_;
  std::map<std::size_t, std::size_t> node_ids_, leaf_ids_;
};

inline NodeRef read_general(const json& j, GeneralTreeBuilder& b) {
  if (!j.is_object()) throw ParseError("tree node must be an object");
  if (j.contains("leaf")) return b.add_leaf(number(j["leaf"], "leaf value"));
  const json& children = require(j, "children", "general node");
  if (!children.is_array()) throw ParseError("children must be an array");
  std::vector<double> weights = numbers(require(j, "weights", "general node"), "weights");
  if (children.size() < 2) throw ModelError("general node has fewer than two children");
  if (weights.size() != children.size()) throw ModelError("edge weights not aligned with children");
  std::vector<NodeRef> refs;
  for (const auto& c : children) refs.push_back(read_general(c, b));
  return b.add_node(std::move(refs), std::move(weights));
}

inline AnyTree read_tree_document(const json& doc, std::optional<std::size_t> expected_dim) {
  if (!doc.is_object()) throw ParseError("tree document must be an object");
  const json& type = require(doc, "type", "tree document");
  if (!type.is_string()) throw ParseError("type must be a string");
  const std::size_t dim = count_field(require(doc, "feature_dim", "tree document"), "feature_dim");
  if (expected_dim && dim != *expected_dim)
    throw ModelError("ensemble member has feature_dim " + std::to_string(dim) + ", expected " +
                     std::to_string(*expected_dim));
  const json& root = require(doc, "root", "tree document");
  const auto t = type.get<std::string>();
  if (t == "binary") {
    if (dim == 0) throw ModelError("binary tree needs feature_dim >= 1");
    return BinaryReader(dim).read(root);
  }
  if (t == "general") {
    GeneralTreeBuilder b;
    const NodeRef r = read_general(root, b);
    GeneralTree tree = b.build(r, dim);
    if (auto report = validate(tree); !report) throw ModelError(report.to_string());
    return tree;
  }
  throw ParseError("unknown tree type \"" + t + "\"");
}

inline json write_node(const BinaryDecisionTree& t, NodeRef r) {
  if (r.is_leaf()) return {{"leaf", t.leaf_values()[r.index]}};
  const Predicate& p = t.test(r.index);
  json j;
  if (p.feature())
    j["feature"] = *p.feature();
  else
    j["weights"] = std::vector<double>(p.weights().begin(), p.weights().end());
  j["threshold"] = p.threshold();
  j["left"] = write_node(t, t.shape().left(r.index));
  j["right"] = write_node(t, t.shape().right(r.index));
  return j;
}

inline json write_node(const GeneralTree& t, NodeRef r) {
  if (r.is_leaf()) return {{"leaf", t.leaf_values()[r.index]}};
  json children = json::array();
  for (const auto& c : t.node(r.index).children) children.push_back(write_node(t, c));
  return {{"children", std::move(children)}, {"weights", t.node(r.index).weights}};
}

inline json tree_document(const BinaryDecisionTree& t) {
  return {{"type", "binary"}, {"feature_dim", t.feature_dim()}, {"root", write_node(t, t.shape().root())}};
}

inline json tree_document(const GeneralTree& t) {
  return {{"type", "general"}, {"feature_dim", t.feature_dim()}, {"root", write_node(t, t.root())}};
}

}  // namespace detail

/// Parses a tree file (single tree or ensemble).
inline Model parse_model(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  Model m;
  try {
    if (doc.is_object() && doc.value("type", "") == "ensemble") {
      m.ensemble = true;
      m.feature_dim = detail::count_field(detail::require(doc, "feature_dim", "ensemble"), "feature_dim");
      const auto& trees = detail::require(doc, "trees", "ensemble");
      if (!trees.is_array()) throw ParseError("trees must be an array");
      for (const auto& t : trees) m.trees.push_back(detail::read_tree_document(t, m.feature_dim));
    } else {
      m.trees.push_back(detail::read_tree_document(doc, std::nullopt));
      m.feature_dim = std::visit([](const auto& t) { return t.feature_dim(); }, m.trees.front());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed tree document: ") + e.what());
  }
  return m;
}

/// Parses a single-tree document.
inline AnyTree parse_tree(std::string_view text) {
  Model m = parse_model(text);
  if (m.ensemble) throw ParseError("expected a single tree, found an ensemble");
  return std::move(m.trees.front());
}

/// Canonical JSON text: sorted keys, two-space indent, shortest round-trip
/// numbers, no ids.
inline std::string serialize_tree(const BinaryDecisionTree& t) { return detail::tree_document(t).dump(2) + "\n"; }
inline std::string serialize_tree(const GeneralTree& t) { return detail::tree_document(t).dump(2) + "\n"; }
inline std::string serialize_tree(const AnyTree& t) {
  return std::visit([](const auto& x) { return serialize_tree(x); }, t);
}

inline std::string serialize_model(const Model& m) {
  if (!m.ensemble && m.trees.size() == 1) return serialize_tree(m.trees.front());
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : m.trees)
    trees.push_back(std::visit([](const auto& x) { return detail::tree_document(x); }, t));
  nlohmann::json doc = {{"type", "ensemble"}, {"feature_dim", m.feature_dim}, {"trees", std::move(trees)}};
  return doc.dump(2) + "\n";
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// CSV instances

/// One instance per line, comma-separated decimals, no header. Blank lines
/// are skipped. All rows must have the same width.
inline Matrix<double> read_instances(std::istream& in) {
  std::vector<double> values;
  std::size_t width = 0, rows = 0, line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t count = 0;
    std::size_t pos = 0;
    while (true) {
      const std::size_t end = std::min(line.find(',', pos), line.size());
      std::string_view cell(line.data() + pos, end - pos);
      while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
      while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
      if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
        throw ParseError("line " + std::to_string(line_no) + ": \"" + std::string(cell) + "\" is not a number");
      values.push_back(v);
      ++count;
      if (end == line.size()) break;
      pos = end + 1;
    }
    if (rows == 0)
      width = count;
    else if (count != width)
      throw DimensionError("line " + std::to_string(line_no) + " has " + std::to_string(count) +
                           " values, expected " + std::to_string(width));
    ++rows;
  }
  Matrix<double> out(rows, width);
  for (std::size_t i = 0; i < rows; ++i)
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(i * width), width, out.row(i).begin());
  return out;
}

inline void write_instances(std::ostream& out, const Matrix<double>& x) {
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) out << (j ? "," : "") << format_number(x(i, j), 17);
    out << '\n';
  }
}

inline void write_csv_row(std::ostream& out, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) out << (i ? "," : "") << format_number(values[i]);
  out << '\n';
}

// ---------------------------------------------------------------------------
// Matrix dumps: "rows cols", then one space-separated row per line.

inline void write_matrix(std::ostream& out, const BitMatrix& m) {
  out << m.rows() << ' ' << m.cols() << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? " " : "") << (m(i, j) ? 1 : 0);
    out << '\n';
  }
}

inline void write_matrix(std::ostream& out, const SignedPathMatrix& m) {
  out << m.rows() << ' ' << m.cols() << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
    out << '\n';
  }
}

inline void write_matrix(std::ostream& out, const Matrix<double>& m) {
  out << m.rows() << ' ' << m.cols() << '\n';
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? " " : "") << format_number(m(i, j));
    out << '\n';
  }
}

}  // namespace treemat
