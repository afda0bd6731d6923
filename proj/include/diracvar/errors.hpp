#pragma once

#include <stdexcept>
#include <string>

namespace diracvar {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point lies outside a chart's open set.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Two objects that must live on one chart do not.
class ChartMismatch : public Error {
 public:
  using Error::Error;
};

/// A field produced NaN or infinity.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Construction data fails a defining identity (closedness, Jacobi, rank).
class ConstructionError : public Error {
 public:
  using Error::Error;
};

/// No Hamiltonian direction exists: dH is not attainable at the point.
class AttainabilityError : public Error {
 public:
  using Error::Error;
};

/// A discrete velocity is not in the anchor image (endpoints on different leaves).
class LeafMismatchError : public Error {
 public:
  using Error::Error;
};

/// Newton or KKT iteration failed to converge.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration, scenario document or expression.
class ConfigError : public Error {
 public:
  using Error::Error;
};

std::string format_point(const double* data, int size);

}  // namespace diracvar
