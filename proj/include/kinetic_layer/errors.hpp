#pragma once

#include <stdexcept>
#include <string>

namespace kinetic_layer {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Sequence or table sizes that do not match their grids.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A characteristic does not reach the requested location.
class UnreachableError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Characteristic reaches the wall, so it has no turning point.
class NoTurningError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Direction tangent to the wall (sinφ = 0).
class GrazingError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Fixed-point iteration hit its cap before meeting the tolerance.
class IterationError : public Error {
 public:
  IterationError(const std::string& what, int iterations, double residual)
      : Error(what), iterations_(iterations), residual_(residual) {}
  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

/// Quadrature, root finding or a linear solve failed.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A checked mathematical property (maximum principle, bounds, ...) is violated.
class PropertyFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace kinetic_layer
