#pragma once

#include <stdexcept>
#include <string>

namespace mscat {

/// Base of every error raised by the library. The CLI maps subclasses to
/// process exit codes (see exit_code()).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a function (negative x for
/// J_n, non-positive x for Y_n, zero reference in a metric...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Shape or value mismatch between arguments.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Invalid or under-resolved configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Evaluation at a singular point of a kernel.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf in an iterative method or non-convergence the caller asked to
/// treat as fatal.
class SolverError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed binary file; `offset` is the byte position where parsing failed.
class FormatError : public IoError {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : IoError(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Re-noising an already noisy measurement set and similar misuse.
class UsageError : public Error {
 public:
  using Error::Error;
};

namespace exit_codes {
inline constexpr int kOk = 0;
inline constexpr int kConfig = 2;
inline constexpr int kSolver = 3;
inline constexpr int kIo = 4;
inline constexpr int kValidation = 5;
}  // namespace exit_codes

}  // namespace mscat
