#pragma once

#include <stdexcept>
#include <string>

namespace oamsort {

/// Base class for every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad geometry, empty input, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A computation produced or received non-finite or degenerate numbers.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unknown configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace oamsort
