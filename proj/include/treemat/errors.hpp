#pragma once

#include <stdexcept>
#include <string>

namespace treemat {

/// Malformed serialized input (bad JSON, missing or mistyped fields, bad CSV).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Structurally well-formed input describing an invalid tree.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Feature vector, weight vector or probability vector of the wrong length.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace treemat
