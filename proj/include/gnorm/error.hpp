#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gnorm {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed presentation, word or element text. Carries a 1-based line and
/// column.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error("line " + std::to_string(line) + ", column " +
              std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// The operation needs a normal form (or another capability) the group's
/// structure class does not provide.
class UnsupportedClassError : public Error {
 public:
  using Error::Error;
};

/// A configured resource cap (ball size, support size, dimension) was hit.
class ResourceLimitError : public Error {
 public:
  using Error::Error;
};

/// Operands do not fit together (alphabet, dimension, presentation).
class MismatchError : public Error {
 public:
  using Error::Error;
};

/// A certificate or witness failed re-verification.
class VerificationError : public Error {
 public:
  using Error::Error;
};

}  // namespace gnorm
