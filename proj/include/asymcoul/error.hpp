#pragma once

#include <stdexcept>
#include <string>

namespace asymcoul {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent decomposition, basis spec or experiment configuration.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// Errors raised while evaluating a quantity at a particular point. The CLI
/// maps all of these to the "numerical abort" exit status.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the supported domain (w < 0, eta out of range, ...).
class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Overflow of an intermediate quantity.
class RangeError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Zero momentum, zero pair distance, or a stencil reaching a coincidence plane.
class SingularInputError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Evaluation too close to a zero of a cluster wavefunction.
class NodeError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Operation called on an argument it is not defined for (e.g. a within-cluster
/// pair where only cross pairs carry a modified coordinate).
class MisuseError : public Error {
 public:
  using Error::Error;
};

/// A fit was requested with too few usable points.
class InsufficientDataError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace asymcoul
