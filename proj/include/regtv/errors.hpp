#pragma once

#include <stdexcept>
#include <string>

namespace regtv {

// Base of every error the library throws. Each subclass corresponds to one
// failure category of the public contract so callers can branch on type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Division by (or inversion of) a quantity whose value is zero.
class SingularityError : public Error {
 public:
  using Error::Error;
};

// Elementary function evaluated outside its domain (log of a nonpositive value, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// A jet of higher order than a functional or layout supports was requested.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class CoverageError : public Error {
 public:
  using Error::Error;
};

class ConstructionError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace regtv
