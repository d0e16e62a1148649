#pragma once

#include <stdexcept>
#include <string>

namespace routhlab {

// Exception hierarchy. Every failure the library signals derives from Error so the CLI can map
// categories onto exit codes (see cli.hpp).

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Contract / configuration failures (exit code 2 in the CLI).
class UsageError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public UsageError {
 public:
  using UsageError::UsageError;
};

class ParseError : public UsageError {
 public:
  ParseError(const std::string& what, int line, int column)
      : UsageError(what + " at line " + std::to_string(line) + ", column " +
                   std::to_string(column)),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

class ArityError : public UsageError {
 public:
  using UsageError::UsageError;
};

class PreconditionError : public UsageError {
 public:
  using UsageError::UsageError;
};

class InvarianceError : public UsageError {
 public:
  using UsageError::UsageError;
};

// Numerical failures (exit code 3 in the CLI).
class NumericalError : public Error {
 public:
  using Error::Error;
};

class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// A finite-difference stencil point left the field's domain although the center did not.
class StencilDomainError : public DomainError {
 public:
  using DomainError::DomainError;
};

class SingularHessian : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularBlock : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoConvergence : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class StepFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class EnergyUnreachable : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateCurve : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoIntersection : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace routhlab
