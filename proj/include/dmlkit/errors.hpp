#pragma once

#include <stdexcept>
#include <string>

namespace dmlkit {

/// Raised when array dimensions disagree (row counts, column counts, rank).
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for out-of-range parameters and degenerate requests.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a quantity is mathematically undefined for the given data
/// (for example r2 against a constant target).
class UndefinedMetric : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when a learner fails to produce a usable model.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dmlkit
