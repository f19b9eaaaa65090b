#pragma once

#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

namespace robustpath {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments: dimension mismatches, non-finite inputs, invalid
/// shape parameters.
class InputError : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class UnboundedError : public Error {
 public:
  using Error::Error;
};

/// An inner solver stopped before certifying its optimality residual.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, double residual, int iterations)
      : Error(what + " (residual " + short_number(residual) + " after " + std::to_string(iterations) +
              " iterations)"),
        residual_(residual),
        iterations_(iterations) {}

  /// Wraps a failure reported further down, e.g. by a path tracer.
  explicit SolverError(const std::string& what)
      : Error(what), residual_(std::numeric_limits<double>::quiet_NaN()), iterations_(-1) {}

  double residual() const noexcept { return residual_; }
  int iterations() const noexcept { return iterations_; }

 private:
  static std::string short_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
  }

  double residual_;
  int iterations_;
};

}  // namespace robustpath
