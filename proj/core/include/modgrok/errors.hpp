#pragma once

#include <stdexcept>
#include <string>

namespace modgrok {

// Base for every error raised by the library. Each subclass maps to one
// failure category so callers (and the CLI exit-code mapping) can dispatch
// on type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class PersistenceError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

class DegenerateFitError : public Error {
 public:
  using Error::Error;
};

}  // namespace modgrok
