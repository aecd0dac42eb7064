#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace countdiag {

/// Stable error categories. The CLI prints them as `error[<code>]` so
/// scripts can match on the prefix.
enum class ErrorCode {
  domain,       // invalid distribution parameters or support
  parse,        // malformed formula
  data,         // CSV ingestion or design construction
  fit,          // non-convergence, rank deficiency, separation
  config,       // invalid command-line configuration
  io,           // files that cannot be opened or written
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& message)
      : Error(ErrorCode::domain, message) {}
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t offset)
      : Error(ErrorCode::parse,
              message + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& message)
      : Error(ErrorCode::data, message) {}
};

class FitError : public Error {
 public:
  explicit FitError(const std::string& message)
      : Error(ErrorCode::fit, message) {}
};

/// Raised when an iterative fitter stops without meeting its tolerances.
/// Carries the last iterate and its gradient norm for the report.
class ConvergenceError : public FitError {
 public:
  ConvergenceError(const std::string& message, std::vector<double> last_iterate,
                   double gradient_norm, int iterations)
      : FitError(message + " (gradient max-norm " +
                 std::to_string(gradient_norm) + " after " +
                 std::to_string(iterations) + " iterations)"),
        last_iterate_(std::move(last_iterate)),
        gradient_norm_(gradient_norm),
        iterations_(iterations) {}

  const std::vector<double>& last_iterate() const noexcept {
    return last_iterate_;
  }
  double gradient_norm() const noexcept { return gradient_norm_; }
  int iterations() const noexcept { return iterations_; }

 private:
  std::vector<double> last_iterate_;
  double gradient_norm_;
  int iterations_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message)
      : Error(ErrorCode::config, message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message)
      : Error(ErrorCode::io, message) {}
};

}  // namespace countdiag
