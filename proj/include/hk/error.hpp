#pragma once

#include <stdexcept>
#include <string>

namespace hk {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point outside a chart, a singular matrix, a non-positive scale.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A mathematical precondition of an operation does not hold
/// (insufficient spectrum, freeness floor, smallness condition).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// An iteration diverged or ran out of steps.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A data file does not match its schema or fails its load-time checks.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace hk
