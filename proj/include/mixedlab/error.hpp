#pragma once

#include <stdexcept>
#include <string>

namespace mixedlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidWeight : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class CoverageError : public Error {
 public:
  using Error::Error;
};

class InvalidRho : public Error {
 public:
  using Error::Error;
};

// Malformed experiment configuration; the message carries the field path.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Raised by the Rubio de Francia iteration when the series does not decay.
class K0TooSmall : public Error {
 public:
  K0TooSmall(const std::string& what, double growth) : Error(what), growth_ratio(growth) {}
  double growth_ratio;
};

}  // namespace mixedlab
