#pragma once

#include <stdexcept>
#include <string>

namespace stokesamg {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct SingularMatrix : Error {
  using Error::Error;
};

struct ZeroDiagonal : Error {
  using Error::Error;
};

struct SingularPatch : Error {
  using Error::Error;
};

struct NonManifold : Error {
  using Error::Error;
};

struct MalformedFile : Error {
  using Error::Error;
};

struct UntaggedBoundary : Error {
  using Error::Error;
};

struct CompatibilityError : Error {
  using Error::Error;
};

struct StabilityWarning : Error {
  using Error::Error;
};

struct UnsupportedDiscretization : Error {
  using Error::Error;
};

struct SolverStagnation : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace stokesamg
