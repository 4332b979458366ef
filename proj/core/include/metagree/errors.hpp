#pragma once

#include <stdexcept>
#include <string>

namespace metagree {

// Dimension/length mismatches and violated call preconditions.
class ShapeError : public std::invalid_argument {
 public:
  explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Non-finite values produced during computation (overflow, NaN propagation).
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad config files, malformed input files, incompatible checkpoints.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace metagree
