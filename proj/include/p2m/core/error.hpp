#pragma once

#include <stdexcept>
#include <string>

namespace p2m {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition or invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Filesystem or format problem while reading or writing an artifact.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A pluggable backend failed, timed out, or is unavailable.
class BackendError : public Error {
 public:
  using Error::Error;
};

}  // namespace p2m
