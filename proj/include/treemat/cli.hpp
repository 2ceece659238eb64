#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "treemat/errors.hpp"
#include "treemat/flatten.hpp"
#include "treemat/fuzzy.hpp"
#include "treemat/io.hpp"
#include "treemat/traversal.hpp"
#include "treemat/tree.hpp"

namespace treemat::cli {

enum ExitCode : int { ok = 0, disagreement = 1, usage = 2, invalid_model = 3, dimension_mismatch = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Runs `body`, mapping library exceptions to exit codes with a message on
/// `err`.
inline int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return usage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return usage;
  } catch (const ModelError& e) {
    err << "invalid model: " << e.what() << '\n';
    return invalid_model;
  } catch (const DimensionError& e) {
    err << "dimension mismatch: " << e.what() << '\n';
    return dimension_mismatch;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return usage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return usage;
  }
}

inline Model load_model(const std::string& path) { return parse_model(read_file(path)); }

inline Matrix<double> load_instances(const std::string& path, std::size_t expected_dim) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  Matrix<double> x = read_instances(in);
  if (x.rows() > 0 && x.cols() != expected_dim)
    throw DimensionError(path + " has " + std::to_string(x.cols()) + " features per instance, model expects " +
                         std::to_string(expected_dim));
  return x;
}

inline std::vector<FlattenedTree> flatten_all(const Model& m) {
  std::vector<FlattenedTree> out;
  for (const auto& t : m.trees) {
    const auto* b = std::get_if<BinaryDecisionTree>(&t);
    if (!b) throw ModelError("ensembles may only contain binary trees");
    out.push_back(flatten(*b));
  }
  return out;
}

inline std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      throw UsageError("\"" + cell + "\" is not a number");
    }
    if (cell.find_first_not_of(" \t", used) != std::string::npos) throw UsageError("\"" + cell + "\" is not a number");
    out.push_back(v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// flatten

struct FlattenOptions {
  std::string tree_path;
  std::string kind = "right";  // right | left | signed | fuzzy | path
  std::optional<std::string> p;
};

inline int run_flatten(const FlattenOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    static const std::vector<std::string> kinds{"right", "left", "signed", "fuzzy", "path"};
    if (std::find(kinds.begin(), kinds.end(), o.kind) == kinds.end())
      throw UsageError("unknown matrix kind \"" + o.kind + "\"");
    if (o.kind == "fuzzy" && !o.p) throw UsageError("--kind fuzzy needs --p");
    const Model m = load_model(o.tree_path);
    if (m.ensemble) throw UsageError("flatten expects a single tree");
    if (const auto* g = std::get_if<GeneralTree>(&m.trees.front())) {
      if (o.kind != "path") throw UsageError("general trees only support --kind path");
      write_matrix(out, build_general_path_matrix(*g));
      return ok;
    }
    const auto& tree = std::get<BinaryDecisionTree>(m.trees.front());
    const TreeShape& shape = tree.shape();
    if (o.kind == "right")
      write_matrix(out, build_right_matrix(shape));
    else if (o.kind == "left")
      write_matrix(out, build_left_matrix(shape));
    else if (o.kind == "signed")
      write_matrix(out, build_signed_matrix(shape));
    else if (o.kind == "fuzzy")
      write_matrix(out, build_fuzzy_matrix(shape, parse_number_list(*o.p)));
    else
      throw UsageError("--kind path needs a general tree");
    return ok;
  });
}

// ---------------------------------------------------------------------------
// score

struct ScoreOptions {
  std::string tree_path;
  std::string instances_path;
  std::string algorithm = "naive";
  bool soft = false;
};

inline int run_score(const ScoreOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto algo = parse_algorithm(o.algorithm);
    if (!algo) throw UsageError("unknown algorithm \"" + o.algorithm + "\"");
    const Model m = load_model(o.tree_path);

    if (const auto* g = std::get_if<GeneralTree>(&m.trees.front()); g && !m.ensemble) {
      if (!o.soft) throw UsageError("general trees can only be scored with --soft");
      const Matrix<double> x = load_instances(o.instances_path, m.feature_dim);
      const auto dist = leaf_probabilities(build_general_path_matrix(*g));
      for (std::size_t i = 0; i < x.rows(); ++i) write_csv_row(out, dist.probs);
      return ok;
    }

    const auto trees = flatten_all(m);
    const Matrix<double> x = load_instances(o.instances_path, m.feature_dim);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const auto row = x.row(i);
      if (o.soft) {
        for (const auto& f : trees)
          write_csv_row(out, soft_attention(f, signed_test_vector(compute_test_vector(f.tree, row))).probs);
        continue;
      }
      if (!m.ensemble) {
        const auto r = traverse(trees.front(), row, *algo);
        out << r.leaf.ordinal() << ' ' << format_number(r.value) << '\n';
        continue;
      }
      double total = 0.0;
      std::string leaves;
      for (const auto& f : trees) {
        const auto r = traverse(f, row, *algo);
        total += r.value;
        leaves += ' ' + std::to_string(r.leaf.ordinal());
      }
      out << format_number(total) << leaves << '\n';
    }
    return ok;
  });
}

// ---------------------------------------------------------------------------
// compare

/// First instance where an algorithm leaves the recursive traversal's exit
/// leaf. Instances and leaves are 1-based.
struct Disagreement {
  std::size_t instance = 0;
  std::size_t tree = 0;
  Algorithm algorithm = Algorithm::naive;
  std::size_t leaf = 0;
  std::size_t expected = 0;
};

inline std::optional<Disagreement> find_disagreement(std::span<const FlattenedTree> trees,
                                                     const Matrix<double>& x,
                                                     std::span<const Algorithm> algorithms) {
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t k = 0; k < trees.size(); ++k) {
      const LeafId expected = naive_traverse(trees[k].tree, x.row(i));
      for (Algorithm a : algorithms) {
        const LeafId got = traverse(trees[k], x.row(i), a).leaf;
        if (got != expected) return Disagreement{i + 1, k + 1, a, got.ordinal(), expected.ordinal()};
      }
    }
  }
  return std::nullopt;
}

inline void report(std::ostream& out, const Disagreement& d, bool ensemble) {
  out << "disagreement: instance " << d.instance << " algorithm " << algorithm_name(d.algorithm) << " leaf "
      << d.leaf << " (expected " << d.expected;
  if (ensemble) out << ", tree " << d.tree;
  out << ")\n";
}

/// Checks every algorithm against the recursive traversal on every instance.
inline int compare_trees(std::span<const FlattenedTree> trees, const Matrix<double>& x, bool ensemble,
                         std::ostream& out) {
  if (auto d = find_disagreement(trees, x, all_algorithms)) {
    report(out, *d, ensemble);
    return disagreement;
  }
  out << "all " << all_algorithms.size() << " algorithms agree on " << x.rows() << " instance"
      << (x.rows() == 1 ? "" : "s");
  if (ensemble) out << " across " << trees.size() << " trees";
  out << '\n';
  return ok;
}

/// Direct row products, their log-space form and the converted binary tree
/// must give the same leaf distribution.
inline int compare_general(const GeneralTree& g, std::ostream& out, double tolerance = 1e-9) {
  const Matrix<double> path = build_general_path_matrix(g);
  const auto direct = leaf_probabilities(path);
  const auto converted = leaf_probabilities(convert_general_to_binary(g));
  std::vector<std::pair<std::string, LeafDistribution>> others{{"binary", converted}};
  const auto entries = path.data();
  if (std::all_of(entries.begin(), entries.end(), [](double v) { return v > 0.0; }))
    others.emplace_back("log", leaf_probabilities_log(path));
  for (const auto& [name, dist] : others) {
    for (std::size_t i = 0; i < direct.size(); ++i) {
      if (!(std::abs(direct[i] - dist[i]) <= tolerance)) {
        out << "disagreement: leaf " << i + 1 << " method " << name << " probability " << format_number(dist[i])
            << " (expected " << format_number(direct[i]) << ")\n";
        return disagreement;
      }
    }
  }
  if (!direct.is_distribution(tolerance)) {
    out << "disagreement: leaf probabilities sum to " << format_number(direct.sum()) << '\n';
    return disagreement;
  }
  out << "direct, log and binary distributions agree on " << direct.size() << " leaves\n";
  return ok;
}

struct CompareOptions {
  std::string tree_path;
  std::string instances_path;
};

inline int run_compare(const CompareOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Model m = load_model(o.tree_path);
    if (const auto* g = std::get_if<GeneralTree>(&m.trees.front()); g && !m.ensemble) return compare_general(*g, out);
    const auto trees = flatten_all(m);
    const Matrix<double> x = load_instances(o.instances_path, m.feature_dim);
    return compare_trees(trees, x, m.ensemble, out);
  });
}

// ---------------------------------------------------------------------------
// bench

struct BenchReport {
  std::string name;
  double instances_per_second = 0.0;
  double total_ns = 0.0;  // median over repeats, one pass over all instances
  bool leaf_agreement = false;
};

/// Agreement is checked first; if any algorithm disagrees nothing is timed
/// and the result is empty.
inline std::vector<BenchReport> bench_trees(std::span<const FlattenedTree> trees, const Matrix<double>& x,
                                            std::size_t repeat) {
  std::vector<BenchReport> reports;
  bool all_agree = true;
  for (Algorithm a : all_algorithms) {
    const std::array<Algorithm, 1> one{a};
    const bool agrees = !find_disagreement(trees, x, one);
    all_agree = all_agree && agrees;
    reports.push_back({std::string(algorithm_name(a)), 0.0, 0.0, agrees});
  }
  if (!all_agree) return reports;

  volatile std::size_t sink = 0;
  for (std::size_t k = 0; k < all_algorithms.size(); ++k) {
    std::vector<double> samples;
    for (std::size_t r = 0; r < std::max<std::size_t>(repeat, 1); ++r) {
      std::size_t acc = 0;
      const auto t0 = std::chrono::steady_clock::now();
      for (std::size_t i = 0; i < x.rows(); ++i)
        for (const auto& f : trees) acc += traverse(f, x.row(i), all_algorithms[k]).leaf.position;
      const auto t1 = std::chrono::steady_clock::now();
      sink = sink + acc;
      samples.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count());
    }
    std::sort(samples.begin(), samples.end());
    const std::size_t n = samples.size();
    const double median = n % 2 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
    reports[k].total_ns = median;
    reports[k].instances_per_second = median > 0.0 ? static_cast<double>(x.rows()) * 1e9 / median : 0.0;
  }
  return reports;
}

inline void write_bench(std::ostream& out, std::span<const BenchReport> reports, bool csv) {
  if (csv) {
    out << "algorithm,instances_per_second,total_ns,leaf_agreement\n";
    for (const auto& r : reports)
      out << r.name << ',' << format_number(r.instances_per_second) << ',' << format_number(r.total_ns) << ','
          << (r.leaf_agreement ? "true" : "false") << '\n';
    return;
  }
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %16s %16s %s\n", "algorithm", "instances/s", "total_ns", "agreement");
  out << line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-12s %16.6g %16.6g %s\n", r.name.c_str(), r.instances_per_second,
                  r.total_ns, r.leaf_agreement ? "yes" : "no");
    out << line;
  }
}

struct BenchOptions {
  std::string tree_path;
  std::string instances_path;
  std::size_t repeat = 5;
  bool csv = false;
};

inline int bench_and_report(std::span<const FlattenedTree> trees, const Matrix<double>& x, std::size_t repeat,
                            bool csv, std::ostream& out, std::ostream& err) {
  const auto reports = bench_trees(trees, x, repeat);
  const bool agree = std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.leaf_agreement; });
  if (!agree) {
    if (auto d = find_disagreement(trees, x, all_algorithms)) report(err, *d, trees.size() > 1);
    err << "leaf agreement failed; no timings reported\n";
    return disagreement;
  }
  write_bench(out, reports, csv);
  return ok;
}

inline int run_bench(const BenchOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (o.repeat < 1) throw UsageError("--repeat must be at least 1");
    const Model m = load_model(o.tree_path);
    if (!m.all_binary()) throw UsageError("bench needs binary trees");
    const auto trees = flatten_all(m);
    const Matrix<double> x = load_instances(o.instances_path, m.feature_dim);
    return bench_and_report(trees, x, o.repeat, o.csv, out, err);
  });
}

// ---------------------------------------------------------------------------
// gen

struct GenOptions {
  std::size_t depth = 4;
  std::size_t dim = 4;
  std::size_t count = 1;
  std::uint64_t seed = 0;
  bool general = false;
  std::size_t fanout = 3;
  std::size_t instances = 100;
  std::string tree_out = "tree.json";
  std::string instances_out = "instances.csv";
};

/// Deterministic in the seed: tree k uses the k-th draw of a generator
/// seeded with it, and the instances the draw after the last tree.
inline Model generate_model(const GenOptions& o, Matrix<double>* instances = nullptr) {
  if (o.depth < 1) throw UsageError("--depth must be at least 1");
  if (o.dim < 1) throw UsageError("--dim must be at least 1");
  if (o.count < 1) throw UsageError("--count must be at least 1");
  if (o.general && o.fanout < 2) throw UsageError("--fanout must be at least 2");
  std::mt19937_64 seeder(o.seed);
  Model m;
  m.feature_dim = o.dim;
  m.ensemble = o.count > 1;
  for (std::size_t k = 0; k < o.count; ++k) {
    const std::uint64_t s = seeder();
    if (o.general)
      m.trees.emplace_back(generate_random_general_tree(o.depth, o.fanout, s, o.dim));
    else
      m.trees.emplace_back(generate_random_tree(o.depth, o.dim, s));
  }
  if (instances) *instances = generate_instances(o.instances, o.dim, seeder());
  return m;
}

inline int run_gen(const GenOptions& o, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Matrix<double> x;
    const Model m = generate_model(o, &x);
    {
      std::ofstream f(o.tree_out);
      if (!f) throw UsageError("cannot write " + o.tree_out);
      f << serialize_model(m);
    }
    {
      std::ofstream f(o.instances_out);
      if (!f) throw UsageError("cannot write " + o.instances_out);
      write_instances(f, x);
    }
    out << "wrote " << m.trees.size() << (o.general ? " general" : " binary") << " tree"
        << (m.trees.size() == 1 ? "" : "s") << " to " << o.tree_out << " and " << x.rows() << " instances to "
        << o.instances_out << '\n';
    return ok;
  });
}

}  // namespace treemat::cli
