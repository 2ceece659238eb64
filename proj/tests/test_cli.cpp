#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "treemat/cli.hpp"

using namespace treemat;
namespace cli = treemat::cli;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

template <class Options, class Fn>
Run run(Fn fn, const Options& o) {
  std::ostringstream out, err;
  const int code = fn(o, out, err);
  return {code, out.str(), err.str()};
}

std::string temp_file(const std::string& name, const std::string& contents) {
  const fs::path p = fs::path(testing::TempDir()) / name;
  std::ofstream(p) << contents;
  return p.string();
}

std::string fig1_path() { return fixtures::data_path("fig1.json"); }

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

// Leaf 2's codeword gets +1 at the root, so it also matches the leaf-3 input.
FlattenedTree corrupted_fig1() {
  FlattenedTree f = flatten(fixtures::fig1_tree());
  BitMatrix pos = f.signed_matrix.positive(), neg = f.signed_matrix.negative();
  pos.set(1, 0, true);
  neg.set(1, 0, false);
  f.signed_matrix = SignedPathMatrix(pos, neg);
  return f;
}

}  // namespace

TEST(Flatten, Fig1RightMatrixDump) {
  const auto r = run(cli::run_flatten, cli::FlattenOptions{fig1_path(), "right", {}});
  EXPECT_EQ(r.code, cli::ok);
  EXPECT_EQ(r.out, "6 5\n0 0 1 1 1\n0 1 1 1 1\n1 1 0 0 1\n1 1 0 1 1\n1 1 1 1 0\n1 1 1 1 1\n");
}

TEST(Flatten, SignedDepthOne) {
  const auto r = run(cli::run_flatten, cli::FlattenOptions{fixtures::data_path("depth1.json"), "signed", {}});
  EXPECT_EQ(r.code, cli::ok);
  EXPECT_EQ(r.out, "2 1\n-1\n1\n");
}

TEST(Flatten, FuzzyNeedsProbabilities) {
  const auto r = run(cli::run_flatten, cli::FlattenOptions{fig1_path(), "fuzzy", {}});
  EXPECT_EQ(r.code, cli::usage);
  EXPECT_TRUE(r.out.empty());
  EXPECT_NE(r.err.find("--p"), std::string::npos);
}

TEST(Flatten, FuzzyWithProbabilities) {
  const auto r = run(cli::run_flatten, cli::FlattenOptions{fig1_path(), "fuzzy", "0.5,1,1,1,0.25"});
  EXPECT_EQ(r.code, cli::ok);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n', 4) + 1), "6 5\n0.5 1 1 1 1\n");
  EXPECT_EQ(run(cli::run_flatten, cli::FlattenOptions{fig1_path(), "fuzzy", "0.5,1"}).code, cli::dimension_mismatch);
  EXPECT_EQ(run(cli::run_flatten, cli::FlattenOptions{fig1_path(), "fuzzy", "a,b"}).code, cli::usage);
}

TEST(Flatten, GeneralPathMatrix) {
  const auto r = run(cli::run_flatten, cli::FlattenOptions{fixtures::data_path("fig3_general.json"), "path", {}});
  EXPECT_EQ(r.code, cli::ok);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n', 4) + 1), "8 5\n0.2 0.4 1 1 1\n");
  EXPECT_EQ(run(cli::run_flatten, cli::FlattenOptions{fixtures::data_path("fig3_general.json"), "right", {}}).code,
            cli::usage);
}

TEST(Flatten, ErrorsMapToExitCodes) {
  EXPECT_EQ(run(cli::run_flatten, cli::FlattenOptions{"/nonexistent.json", "right", {}}).code, cli::usage);
  EXPECT_EQ(run(cli::run_flatten, cli::FlattenOptions{temp_file("bad.json", "{"), "right", {}}).code, cli::usage);
  const std::string invalid = temp_file(
      "invalid.json", R"({"type":"binary","feature_dim":1,"root":{"feature":0,"threshold":0,"left":{"leaf":1}}})");
  EXPECT_EQ(run(cli::run_flatten, cli::FlattenOptions{invalid, "right", {}}).code, cli::invalid_model);
  EXPECT_EQ(run(cli::run_flatten, cli::FlattenOptions{fig1_path(), "diagonal", {}}).code, cli::usage);
}

TEST(Score, SignOnLeafThreeInstance) {
  const std::string x = temp_file("leaf3.csv", "0.1,0.1,0.9,0.9,0.1\n");
  const auto r = run(cli::run_score, cli::ScoreOptions{fig1_path(), x, "sign", false});
  EXPECT_EQ(r.code, cli::ok);
  EXPECT_EQ(r.out, "3 3\n");
}

TEST(Score, OutputIdenticalAcrossAlgorithms) {
  Matrix<double> xs;
  const Model m = cli::generate_model({.depth = 8, .dim = 4, .count = 5, .seed = 3, .instances = 200}, &xs);
  const std::string tree = temp_file("ens.json", serialize_model(m));
  std::ostringstream csv;
  write_instances(csv, xs);
  const std::string x = temp_file("ens.csv", csv.str());
  const auto base = run(cli::run_score, cli::ScoreOptions{tree, x, "naive", false});
  ASSERT_EQ(base.code, cli::ok);
  EXPECT_EQ(line_count(base.out), 200u);
  for (Algorithm a : all_algorithms)
    EXPECT_EQ(run(cli::run_score, cli::ScoreOptions{tree, x, std::string(algorithm_name(a)), false}).out, base.out);
}

TEST(Score, EmptyInstances) {
  const auto r = run(cli::run_score, cli::ScoreOptions{fig1_path(), temp_file("empty.csv", ""), "qs", false});
  EXPECT_EQ(r.code, cli::ok);
  EXPECT_TRUE(r.out.empty());
}

TEST(Score, Errors) {
  const std::string x = fixtures::data_path("fig1_instances.csv");
  EXPECT_EQ(run(cli::run_score, cli::ScoreOptions{fig1_path(), x, "fastest", false}).code, cli::usage);
  EXPECT_EQ(run(cli::run_score, cli::ScoreOptions{fig1_path(), temp_file("narrow.csv", "1,2\n"), "qs", false}).code,
            cli::dimension_mismatch);
  EXPECT_EQ(run(cli::run_score, cli::ScoreOptions{fig1_path(), temp_file("nan.csv", "1,2,x,4,5\n"), "qs", false}).code,
            cli::usage);
}

TEST(Score, SoftDistribution) {
  const std::string x = temp_file("leaf3s.csv", "0.1,0.1,0.9,0.9,0.1\n");
  const auto r = run(cli::run_score, cli::ScoreOptions{fig1_path(), x, "naive", true});
  EXPECT_EQ(r.code, cli::ok);
  std::istringstream in(r.out);
  const auto d = read_instances(in);
  ASSERT_EQ(d.cols(), 6u);
  double sum = 0.0;
  for (double p : d.row(0)) sum += p;
  EXPECT_NEAR(sum, 1.0, 1e-10);
  EXPECT_EQ(std::max_element(d.row(0).begin(), d.row(0).end()) - d.row(0).begin(), 2);
}

TEST(Score, GeneralTreeNeedsSoft) {
  const std::string g = fixtures::data_path("fig3_general.json");
  const std::string x = temp_file("g.csv", "0\n0\n");
  EXPECT_EQ(run(cli::run_score, cli::ScoreOptions{g, x, "naive", false}).code, cli::usage);
  const auto r = run(cli::run_score, cli::ScoreOptions{g, x, "naive", true});
  EXPECT_EQ(r.code, cli::ok);
  EXPECT_EQ(line_count(r.out), 2u);
  EXPECT_EQ(r.out.substr(0, r.out.find(',')), "0.08");
}

TEST(Compare, Fig1Agrees) {
  const auto r = run(cli::run_compare, cli::CompareOptions{fig1_path(), fixtures::data_path("fig1_instances.csv")});
  EXPECT_EQ(r.code, cli::ok) << r.err;
}

TEST(Compare, SingleInstanceDepthOne) {
  const auto r = run(cli::run_compare, cli::CompareOptions{fixtures::data_path("depth1.json"), temp_file("one.csv", "0.7\n")});
  EXPECT_EQ(r.code, cli::ok);
}

TEST(Compare, CorruptedSignedMatrixIsCaught) {
  const std::vector<FlattenedTree> trees{corrupted_fig1()};
  Matrix<double> x(2, 5);
  const auto all_true = fixtures::fig1_instance({true, true, true, true, true});
  const auto leaf3 = fixtures::fig1_instance({false, false, true, true, false});
  std::copy(all_true.begin(), all_true.end(), x.row(0).begin());
  std::copy(leaf3.begin(), leaf3.end(), x.row(1).begin());
  std::ostringstream out;
  EXPECT_EQ(cli::compare_trees(trees, x, false, out), cli::disagreement);
  EXPECT_EQ(out.str().substr(0, out.str().find(" (")), "disagreement: instance 2 algorithm sign leaf 2");
}

TEST(Compare, GeneralTree) {
  const auto r = run(cli::run_compare, cli::CompareOptions{fixtures::data_path("fig3_general.json"), ""});
  EXPECT_EQ(r.code, cli::ok) << r.err;
}

TEST(Bench, SmokeRunHasEightRows) {
  const auto r = run(cli::run_bench, cli::BenchOptions{fig1_path(), fixtures::data_path("fig1_instances.csv"), 1, false});
  EXPECT_EQ(r.code, cli::ok) << r.err;
  EXPECT_EQ(line_count(r.out), 9u);
  const auto c = run(cli::run_bench, cli::BenchOptions{fig1_path(), fixtures::data_path("fig1_instances.csv"), 3, true});
  EXPECT_EQ(c.code, cli::ok);
  std::istringstream lines(c.out);
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "algorithm,instances_per_second,total_ns,leaf_agreement");
  std::size_t rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    EXPECT_NE(line.find(",true"), std::string::npos) << line;
  }
  EXPECT_EQ(rows, 8u);
}

TEST(Bench, ReportsPositiveThroughput) {
  Matrix<double> x;
  const Model m = cli::generate_model({.depth = 8, .dim = 6, .count = 20, .seed = 1, .instances = 300}, &x);
  const auto trees = cli::flatten_all(m);
  const auto reports = cli::bench_trees(trees, x, 2);
  ASSERT_EQ(reports.size(), 8u);
  for (const auto& r : reports) {
    EXPECT_TRUE(r.leaf_agreement);
    EXPECT_GT(r.instances_per_second, 0.0) << r.name;
    EXPECT_GT(r.total_ns, 0.0);
  }
}

TEST(Bench, AgreementFailurePrintsNoTimings) {
  const std::vector<FlattenedTree> trees{corrupted_fig1()};
  const auto leaf3 = fixtures::fig1_instance({false, false, true, true, false});
  Matrix<double> x(1, 5);
  std::copy(leaf3.begin(), leaf3.end(), x.row(0).begin());
  std::ostringstream out, err;
  EXPECT_EQ(cli::bench_and_report(trees, x, 1, false, out, err), cli::disagreement);
  EXPECT_TRUE(out.str().empty());
  EXPECT_NE(err.str().find("algorithm sign"), std::string::npos);
}

TEST(Bench, RejectsZeroRepeat) {
  EXPECT_EQ(run(cli::run_bench, cli::BenchOptions{fig1_path(), fixtures::data_path("fig1_instances.csv"), 0, false}).code,
            cli::usage);
}

TEST(Gen, DeterministicFiles) {
  auto once = [](const std::string& tag) {
    cli::GenOptions o{.depth = 3, .dim = 4, .count = 1, .seed = 7};
    o.tree_out = (fs::path(testing::TempDir()) / ("t" + tag + ".json")).string();
    o.instances_out = (fs::path(testing::TempDir()) / ("x" + tag + ".csv")).string();
    EXPECT_EQ(run(cli::run_gen, o).code, cli::ok);
    return read_file(o.tree_out) + read_file(o.instances_out);
  };
  EXPECT_EQ(once("a"), once("b"));
}

TEST(Gen, GeneralTreesValidate) {
  cli::GenOptions o{.depth = 4, .dim = 2, .count = 3, .seed = 5, .general = true, .fanout = 4};
  o.tree_out = (fs::path(testing::TempDir()) / "g.json").string();
  o.instances_out = (fs::path(testing::TempDir()) / "g.csv").string();
  ASSERT_EQ(run(cli::run_gen, o).code, cli::ok);
  const Model m = parse_model(read_file(o.tree_out));
  ASSERT_EQ(m.trees.size(), 3u);
  for (const auto& t : m.trees) {
    const auto& g = std::get<GeneralTree>(t);
    EXPECT_TRUE(validate(g).ok());
    EXPECT_LE(g.max_fanout(), 4u);
  }
}

TEST(Gen, HundredTreeEnsembleScores) {
  cli::GenOptions o{.depth = 6, .dim = 3, .count = 100, .seed = 9, .instances = 10};
  o.tree_out = (fs::path(testing::TempDir()) / "e.json").string();
  o.instances_out = (fs::path(testing::TempDir()) / "e.csv").string();
  ASSERT_EQ(run(cli::run_gen, o).code, cli::ok);
  const Model m = parse_model(read_file(o.tree_out));
  EXPECT_TRUE(m.ensemble);
  EXPECT_EQ(m.trees.size(), 100u);
  const auto r = run(cli::run_score, cli::ScoreOptions{o.tree_out, o.instances_out, "matrix", false});
  EXPECT_EQ(r.code, cli::ok);
  EXPECT_EQ(line_count(r.out), 10u);
  EXPECT_EQ(run(cli::run_compare, cli::CompareOptions{o.tree_out, o.instances_out}).code, cli::ok);
}

TEST(Gen, InvalidArguments) {
  EXPECT_EQ(run(cli::run_gen, cli::GenOptions{.depth = 0}).code, cli::usage);
  EXPECT_EQ(run(cli::run_gen, cli::GenOptions{.dim = 0}).code, cli::usage);
  EXPECT_EQ(run(cli::run_gen, cli::GenOptions{.count = 0}).code, cli::usage);
  EXPECT_EQ(run(cli::run_gen, cli::GenOptions{.general = true, .fanout = 1}).code, cli::usage);
}
