#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace termweight {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data. `location` is a byte offset or 1-based line number,
/// depending on the format being parsed.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t location)
      : Error(message), location_(location) {}
  std::size_t location() const noexcept { return location_; }

 private:
  std::size_t location_;
};

/// Missing files, unknown identifiers, inconsistent artifacts.
class DataError : public Error {
 public:
  using Error::Error;
};

class LookupError : public DataError {
 public:
  using DataError::DataError;
};

/// Invalid parameters or configuration supplied by the caller.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, divergence, violated numeric invariants.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace termweight
