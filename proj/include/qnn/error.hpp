#pragma once

#include <stdexcept>
#include <string>

namespace qnn {

/// Bad input: wrong shapes, out-of-range rates, malformed files or configs.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// A computation that ran but produced an unusable or failing result
/// (divergence, infeasible calculator, failed statistical check).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qnn
