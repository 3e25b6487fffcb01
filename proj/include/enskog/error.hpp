#pragma once

#include <stdexcept>
#include <string>

namespace enskog {

/// Runtime failure of a simulation or evaluation (event budget, overlap, resolution...).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid scenario configuration; the CLI maps it to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace enskog
