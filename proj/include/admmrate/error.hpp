#pragma once

#include <stdexcept>
#include <string>

namespace admmrate {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: a topology, objective or configuration that cannot be
/// used as given. The CLI maps this family to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine failed or detected a violated analytical
/// assumption. The CLI maps this family to exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class InvalidTopology : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NotConnected : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class InvalidObjective : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class NotSymmetric : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoConvergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonConvexDetected : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class AssumptionViolated : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularH : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Two independent computations of the same quantity disagreed.
class Inconsistent : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace admmrate
