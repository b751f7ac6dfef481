#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flowroute {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent user input. CLI exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

class ParseError : public InputError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class NotFoundError : public InputError {
 public:
  using InputError::InputError;
};

class DuplicateError : public InputError {
 public:
  using InputError::InputError;
};

class InvalidPathError : public InputError {
 public:
  using InputError::InputError;
};

class ResourceLimitError : public InputError {
 public:
  using InputError::InputError;
};

// No feasible route or simulation. CLI exit code 3.
class RoutingError : public Error {
 public:
  using Error::Error;
};

// Broken internal invariant. CLI exit code 4.
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace flowroute
