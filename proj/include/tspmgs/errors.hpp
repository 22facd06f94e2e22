#pragma once

#include <stdexcept>
#include <string>

namespace tspmgs {

// Error categories surfaced by the library. The CLI maps each one to a
// distinct exit code.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or missing input data: undecodable images, empty prompts, malformed files.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent configuration: scheme/task mismatch, out-of-range hyperparameters.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown: zero vectors, non-finite losses.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// The requested encoder backend cannot be constructed or loaded.
class BackendError : public Error {
 public:
  using Error::Error;
};

/// Correlation undefined (fewer than two points or a constant vector).
class CorrelationError : public Error {
 public:
  using Error::Error;
};

}  // namespace tspmgs
