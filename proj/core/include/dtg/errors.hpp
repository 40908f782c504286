#pragma once

#include <stdexcept>
#include <string>

namespace dtg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition on an argument violated (bad shape, out-of-range index, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Input is well-formed but numerically degenerate (zero vector, identical points).
class DegenerateInput : public Error {
 public:
  using Error::Error;
};

/// A NaN or infinity appeared where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Negatives requested from a queue that has not been filled yet.
class ColdQueueError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated serialized file.
class FormatError : public IoError {
 public:
  using IoError::IoError;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class ChecksumError : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace dtg
