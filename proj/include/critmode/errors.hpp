// Copyright the critmode authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace critmode {

/// Base of everything the library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad shapes, out-of-range arguments, violated preconditions.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed input files or configuration.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A computed object failed one of its invariants. Carries the residual.
class VerificationError : public Error {
 public:
  VerificationError(const std::string& what, double residual)
      : Error(what + " (residual " + format(residual) + ")"), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  static std::string format(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
  }
  double residual_;
};

/// An iterative method did not converge.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// solve_affine was asked for a solution the right-hand side does not admit.
class InconsistentSystemError : public Error {
 public:
  InconsistentSystemError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace critmode
