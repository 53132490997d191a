#pragma once

#include <stdexcept>
#include <string>

namespace wulff {

// Base of every error raised by the library. The CLI maps the subclasses
// onto exit codes, so keep the hierarchy flat.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters (dimension, horizon, beta, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A request that would exceed an enumeration / memory / acceptance budget.
class ResourceError : public Error {
 public:
  using Error::Error;
};

// Argument outside the domain of a mathematical operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Solver failure or non-finite value.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace wulff
