#pragma once

#include <stdexcept>
#include <string>

namespace tdv {

/// Bad sizes or out-of-range arguments (wrong intensity vector length,
/// margin leaving no interior pixels, inconsistent grid parameters, ...).
class ParameterError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid or degenerate geometry (self-intersecting polygon, inclusion
/// leaving the domain, miter join running away, ...).
class GeometryError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Iterative solver did not reach the requested tolerance.
class SolverError : public std::runtime_error {
public:
  SolverError(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), final_residual(residual), iterations(iterations) {}
  double final_residual;
  int iterations;
};

/// Mixing data computed under different parameters (polarization data vs.
/// solve parameters, field vs. grid).
class ConsistencyError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A cache entry exists for the requested shape but was produced with
/// different parameters.
class StaleCacheError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// No cache entry at all for the requested shape.
class CacheMissError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace tdv
