#pragma once

#include <stdexcept>
#include <string>

namespace histlogic {

/// Base class for every error raised by the engine. Failures that are part
/// of normal reasoning (an inference that does not go through, an
/// inconsistent family verdict) are reported as values, not exceptions;
/// exceptions mean the request itself was ill-formed.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct NonHermitianInput : Error {
  using Error::Error;
};

struct NonProjectorInput : Error {
  using Error::Error;
};

struct EmptySpan : Error {
  using Error::Error;
};

struct NonProjectorGenerator : Error {
  using Error::Error;
};

struct NonCommutingGenerators : Error {
  using Error::Error;
};

struct UnknownStatementName : Error {
  using Error::Error;
};

struct NotInAlgebra : Error {
  using Error::Error;
};

struct IncompatibleFrameworks : Error {
  using Error::Error;
};

// A shared statement name bound to two different projectors. Counts as a
// form of framework incompatibility, so it can be caught either way.
struct NotationalConflict : IncompatibleFrameworks {
  using IncompatibleFrameworks::IncompatibleFrameworks;
};

struct NonUnitaryStep : Error {
  using Error::Error;
};

struct CountMismatch : Error {
  using Error::Error;
};

struct GridMismatch : Error {
  using Error::Error;
};

struct ZeroWeightCondition : Error {
  using Error::Error;
};

struct InconsistentFamily : Error {
  using Error::Error;
};

/// Raised when a request would exceed one of the configured size guards
/// (dense tensor-space dimension, generator count, term budget).
struct CapacityExceeded : Error {
  using Error::Error;
};

}  // namespace histlogic
