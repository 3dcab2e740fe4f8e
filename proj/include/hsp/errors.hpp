#pragma once

#include <stdexcept>
#include <string>

namespace hsp {

/// Invalid or inconsistent configuration / parameters (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Missing, corrupt or inconsistent input data (CLI exit code 3).
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure: non-finite objective, degenerate fit, too many
/// failed Monte-Carlo trials (CLI exit code 4).
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace hsp
