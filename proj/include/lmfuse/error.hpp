#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lmfuse {

// Bad input data or bad configuration. Maps to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public ValidationError {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : ValidationError(source + ":" + std::to_string(line) + ": " + what),
        source_(source),
        line_(line) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

// A value outside the domain an operation is defined on.
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Non-finite losses and similar numerical breakdowns. Maps to exit code 2.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lmfuse
