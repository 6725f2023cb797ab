#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nonherm {

// Base for every failure raised by the library. The CLI prints what() verbatim.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated precondition or malformed input (bad sizes, NaN entries, parse errors).
class InputError : public Error {
 public:
  using Error::Error;
};

// Iterative kernel gave up. `index` is the stalled deflation / iteration index.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::size_t index)
      : Error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

// Elimination hit a pivot that is zero to working precision.
class SingularMatrixError : public Error {
 public:
  SingularMatrixError(const std::string& what, std::size_t pivot)
      : Error(what), pivot_(pivot) {}
  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

// Right/left eigenvalue pairing failed, or an overlap vanished (Jordan-like).
class PairingError : public Error {
 public:
  PairingError(const std::string& what, std::size_t index)
      : Error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class NearDefectError : public PairingError {
 public:
  using PairingError::PairingError;
};

// Shift lies on (or numerically at) the spectrum where a resolvent is required.
class ResolventError : public Error {
 public:
  using Error::Error;
};

// WKB construction failures: square-root branch ambiguity or missing decay.
class BranchError : public Error {
 public:
  BranchError(const std::string& what, double x) : Error(what), x_(x) {}
  double x() const noexcept { return x_; }

 private:
  double x_;
};

class ConstructionError : public Error {
 public:
  using Error::Error;
};

// A residual or resolvent scan did not behave monotonically.
class ScanError : public Error {
 public:
  using Error::Error;
};

// Metric restricted to its range is not invertible to working precision.
class SingularMetricError : public Error {
 public:
  SingularMetricError(const std::string& what, double ratio)
      : Error(what), ratio_(ratio) {}
  double ratio() const noexcept { return ratio_; }

 private:
  double ratio_;
};

}  // namespace nonherm
