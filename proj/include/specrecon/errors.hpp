#pragma once

#include <stdexcept>
#include <string>

namespace specrecon {

/// Raised when an iterative numerical stage cannot meet its contract
/// (non-convergent bisection, empty admission set, degenerate fit).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised for malformed or schema-violating experiment configurations.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace specrecon
