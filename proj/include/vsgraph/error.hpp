#pragma once

#include <stdexcept>
#include <string>

namespace vsgraph {

// Base class for all library errors. Callers that only need coarse
// handling can catch this; the CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// File could not be read or written.
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// File exists but its bytes do not form a recognized container
// (bad magic, unsupported version).
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& msg) : Error(msg) {}
};

// Well-formed input that violates a stated invariant (NaN payload,
// out-of-range label, non-stochastic row, ...).
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& msg) : Error(msg) {}
};

// Dimension mismatch between operands.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// Caller passed an argument outside its contract (k = 0, negative w, ...).
class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& msg) : Error(msg) {}
};

// Invalid run configuration or manifest.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& msg) : Error(msg) {}
};

}  // namespace vsgraph
