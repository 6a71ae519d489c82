#pragma once

#include <stdexcept>
#include <string>

namespace fxnet {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed CSV row or unparseable field.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Dates not strictly increasing.
class OrderError : public Error {
 public:
  using Error::Error;
};

/// Value outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Dimension mismatch or non-finite input to a network kernel.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Singular innovation matrix or similar numerical breakdown.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint written by a newer format version.
class VersionError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint truncated, schema-invalid or shape-inconsistent.
class CorruptError : public Error {
 public:
  using Error::Error;
};

}  // namespace fxnet
