#pragma once

#include <stdexcept>
#include <string>

namespace cestrade {

// Raised for malformed or inconsistent scenario inputs (config, CSV, invariants).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when an optimization fails to converge or the feasible set is empty.
struct SolveError : std::runtime_error {
  explicit SolveError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cestrade
