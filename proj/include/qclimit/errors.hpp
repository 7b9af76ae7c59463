#pragma once

#include <stdexcept>
#include <string>

namespace qcl {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input: malformed matrices, non-hermitian coefficients, bad
/// configuration values. `code()` is a stable diagnostic identifier
/// (e.g. "E_NONHERMITIAN") and `field()` names the offending input.
class ValidationError : public Error {
 public:
  ValidationError(std::string code, std::string field, const std::string& message)
      : Error(code + ": " + (field.empty() ? "" : field + ": ") + message),
        code_(std::move(code)),
        field_(std::move(field)) {}

  const std::string& code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::string code_;
  std::string field_;
};

/// A phase-space point lies outside the domain of a saturation function
/// (or a square-root radicand is negative).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// The observable is not differentiable at the requested point.
class DerivativeDomainError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// The reduced flow reached the boundary of its domain.
class BoundaryEvent : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Rejection sampling could not produce an admissible state.
class SamplingError : public Error {
 public:
  using Error::Error;
};

/// A finite-difference estimate failed its self-consistency check.
class AccuracyError : public Error {
 public:
  using Error::Error;
};

/// Root finding found no sign change inside the admissible interval.
class NoRootError : public Error {
 public:
  using Error::Error;
};

/// The adaptive integrator could not make progress.
class StepSizeUnderflow : public Error {
 public:
  using Error::Error;
};

}  // namespace qcl
