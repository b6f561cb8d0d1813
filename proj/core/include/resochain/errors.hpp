#pragma once

#include <stdexcept>
#include <string>

namespace resochain {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent user input (configuration files, CLI arguments).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Solver or integrator failure: divergence, non-convergence, ill-conditioning.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace resochain
