#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tscenejal {

// Root of every error the engine raises. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad argument or configuration value.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Input data violates a contract (count mismatch, missing sidecar, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

// Malformed text input. Carries the 1-based line number when known (0 otherwise).
class ParseError : public DataError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : DataError(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Yaw residual too close to +-pi/2 for the secant propagation.
class SingularYawError : public DataError {
 public:
  using DataError::DataError;
};

// Fixed-point kernel iteration did not reach tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}

  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace tscenejal
