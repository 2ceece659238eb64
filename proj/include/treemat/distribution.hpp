#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "treemat/tree.hpp"

namespace treemat {

/// Nonnegative weights over leaves, left to right.
struct LeafDistribution {
  std::vector<double> probs;
  // Set when some leaf's product of nonzero factors fell below the smallest
  // normal double and was reported as 0.
  bool underflow = false;

  std::size_t size() const { return probs.size(); }
  double operator[](std::size_t i) const { return probs[i]; }

  double sum() const { return std::accumulate(probs.begin(), probs.end(), 0.0); }

  bool is_distribution(double tolerance = 1e-9) const {
    return std::all_of(probs.begin(), probs.end(), [](double p) { return p >= 0.0; }) &&
           std::abs(sum() - 1.0) <= tolerance;
  }

  /// Leftmost leaf of maximal probability.
  LeafId argmax() const {
    return {static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) - probs.begin())};
  }
};

}  // namespace treemat
