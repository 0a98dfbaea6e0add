#pragma once

#include <stdexcept>
#include <string>

namespace ddep {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid construction arguments (bounds, parameter ranges, sizes).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The stage design matrix cannot be factored even after the ridge retry.
class SingularDesign : public Error {
 public:
  using Error::Error;
};

/// A linear best response was requested with a non-positive own sensitivity.
class NonConcave : public Error {
 public:
  using Error::Error;
};

/// Too few traces or stages for a slope fit.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

class DivisionByZero : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ddep
