#pragma once

#include <stdexcept>
#include <string>

namespace sepagg {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument is outside the mathematical domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be inverted (or whose derived constants blow up) is singular.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// An iterative numeric routine failed.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. `line()` is 1-based; 0 means "not line specific".
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss during training.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace sepagg
