#pragma once

#include <stdexcept>
#include <string>

namespace reparam {

// Base of everything this library throws.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Violated preconditions and malformed inputs. The CLI maps these to exit 2.
class PreconditionError : public Error {
public:
  using Error::Error;
};

// A solver exhausted its budget. The CLI maps these to exit 3.
class ConvergenceFailure : public Error {
public:
  ConvergenceFailure(const std::string& msg, double best_residual)
      : Error(msg), best_residual(best_residual) {}
  double best_residual;
};

class ParseError : public PreconditionError {
public:
  ParseError(const std::string& msg, std::size_t offset)
      : PreconditionError(msg + " (at offset " + std::to_string(offset) + ")"),
        offset(offset) {}
  std::size_t offset;
};

class DomainError : public PreconditionError {
public:
  using PreconditionError::PreconditionError;
};

class PeriodMismatch : public PreconditionError {
public:
  using PreconditionError::PreconditionError;
};

class AllNeutral : public PreconditionError {
public:
  using PreconditionError::PreconditionError;
};

class InsufficientSignChanges : public PreconditionError {
public:
  InsufficientSignChanges(int found, int needed)
      : PreconditionError("needs at least " + std::to_string(needed) +
                          " sign changes, found " + std::to_string(found)),
        found(found), needed(needed) {}
  int found;
  int needed;
};

class NoStableNeighborhood : public PreconditionError {
public:
  using PreconditionError::PreconditionError;
};

class TrustRegionExceeded : public PreconditionError {
public:
  using PreconditionError::PreconditionError;
};

class SingularMatrix : public PreconditionError {
public:
  using PreconditionError::PreconditionError;
};

class NotOrthogonal : public PreconditionError {
public:
  using PreconditionError::PreconditionError;
};

class DependentBasis : public PreconditionError {
public:
  using PreconditionError::PreconditionError;
};

class NonPositiveK : public PreconditionError {
public:
  using PreconditionError::PreconditionError;
};

class BracketFailure : public PreconditionError {
public:
  using PreconditionError::PreconditionError;
};

class DegenerateJacobian : public PreconditionError {
public:
  using PreconditionError::PreconditionError;
};

class CurveNotClosed : public PreconditionError {
public:
  using PreconditionError::PreconditionError;
};

class OriginHit : public PreconditionError {
public:
  using PreconditionError::PreconditionError;
};

class DerivativeUnderflow : public PreconditionError {
public:
  using PreconditionError::PreconditionError;
};

}  // namespace reparam
