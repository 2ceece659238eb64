#include <iostream>

#include <CLI11.hpp>

#include "treemat/cli.hpp"

namespace cli = treemat::cli;

int main(int argc, char** argv) {
  CLI::App app{"Decision tree traversal as matrix operations"};
  app.require_subcommand(1);

  cli::FlattenOptions flatten;
  auto* fl = app.add_subcommand("flatten", "print a path matrix");
  fl->add_option("tree", flatten.tree_path, "tree file")->required();
  fl->add_option("--kind", flatten.kind, "right, left, signed, fuzzy or path");
  fl->add_option("--p", flatten.p, "comma-separated left-branch probabilities, one per node");

  cli::ScoreOptions score;
  auto* sc = app.add_subcommand("score", "score instances");
  sc->add_option("tree", score.tree_path, "tree or ensemble file")->required();
  sc->add_option("instances", score.instances_path, "CSV instances")->required();
  sc->add_option("--algo", score.algorithm, "naive, qs, dual, matrix, dualmatrix, sign, ecoc or delta");
  sc->add_flag("--soft", score.soft, "print leaf probabilities instead of exit leaves");

  cli::CompareOptions compare;
  auto* cmp = app.add_subcommand("compare", "check every algorithm against recursive traversal");
  cmp->add_option("tree", compare.tree_path, "tree or ensemble file")->required();
  cmp->add_option("instances", compare.instances_path, "CSV instances");

  cli::BenchOptions bench;
  auto* bn = app.add_subcommand("bench", "time every algorithm");
  bn->add_option("tree", bench.tree_path, "tree or ensemble file")->required();
  bn->add_option("instances", bench.instances_path, "CSV instances")->required();
  bn->add_option("--repeat", bench.repeat, "timed passes per algorithm; the median is reported");
  bn->add_flag("--csv", bench.csv, "CSV output");

  cli::GenOptions gen;
  auto* gn = app.add_subcommand("gen", "generate random trees and instances");
  gn->add_option("--depth", gen.depth, "depth bound")->required();
  gn->add_option("--dim", gen.dim, "feature dimension")->required();
  gn->add_option("--count", gen.count, "number of trees; more than one writes an ensemble");
  gn->add_option("--seed", gen.seed, "random seed");
  gn->add_flag("--general", gen.general, "generate general trees with weighted edges");
  gn->add_option("--fanout", gen.fanout, "maximum fan-out of general trees");
  gn->add_option("--instances", gen.instances, "number of instances");
  gn->add_option("--tree-out", gen.tree_out, "tree file to write");
  gn->add_option("--instances-out", gen.instances_out, "CSV file to write");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::usage;
  }

  if (*fl) return cli::run_flatten(flatten, std::cout, std::cerr);
  if (*sc) return cli::run_score(score, std::cout, std::cerr);
  if (*cmp) return cli::run_compare(compare, std::cout, std::cerr);
  if (*bn) return cli::run_bench(bench, std::cout, std::cerr);
  return cli::run_gen(gen, std::cout, std::cerr);
}
