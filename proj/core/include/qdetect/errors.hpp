#pragma once

#include <stdexcept>
#include <string>

namespace qdetect {

/// Raised for malformed configurations, out-of-domain parameters and model/N mismatches.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a Monte Carlo estimate cannot be completed within its replication or horizon budget.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a linear or time-stepping solve fails.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qdetect
