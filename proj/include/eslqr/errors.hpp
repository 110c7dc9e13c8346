#pragma once

#include <stdexcept>
#include <string>

namespace eslqr {

// Base class for every error thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Matrix/vector shapes do not line up.
struct DimensionError : Error {
  using Error::Error;
};

// A value-domain constraint is violated (asymmetric cost matrix, non-positive
// eigenvalues, invalid dither period, non-positive step size, ...).
struct DomainError : Error {
  using Error::Error;
};

// A matrix required to be Schur (all eigenvalues strictly inside the unit
// disk) is not; typically an unstable closed loop.
struct UnstableError : Error {
  using Error::Error;
};

// The controllability rank test failed for a plant that must be controllable.
struct ControllabilityError : Error {
  using Error::Error;
};

// An iterative numerical solver exhausted its iteration budget or could not
// meet its residual tolerance.
struct SolverError : Error {
  using Error::Error;
};

// A computation produced NaN or Inf where a finite value is required.
struct NonFiniteError : Error {
  using Error::Error;
};

// Invalid or inconsistent user-facing configuration (CLI layer).
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace eslqr
