#pragma once

#include <stdexcept>
#include <string>

namespace pacb {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// Parameter outside the domain where a formula is defined (e.g. lambda >= 1/c).
class DomainError : public Error {
 public:
  using Error::Error;
};

class ResourceError : public Error {
 public:
  using Error::Error;
};

// Unstable ARX dynamics or a non-converging stationary covariance.
class InstabilityError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// A complexity term that is infinite (or numerically indistinguishable from
// infinite) for the requested configuration.
class DivergedError : public Error {
 public:
  using Error::Error;
};

}  // namespace pacb
