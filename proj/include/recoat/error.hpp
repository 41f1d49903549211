#pragma once

#include <stdexcept>
#include <string>

namespace recoat {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor/layer shape disagreements.
struct ShapeError : Error {
  using Error::Error;
};

// Rejected numeric input (non-finite coordinates, out-of-range rates).
struct ValueError : Error {
  using Error::Error;
};

// Malformed scene contents (wrong history length, bad field).
struct SceneError : Error {
  using Error::Error;
};

// File parsing / schema-version problems.
struct ParseError : Error {
  using Error::Error;
};

// Filesystem failures, reported with path context.
struct IoError : Error {
  using Error::Error;
};

}  // namespace recoat
