#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace pdip {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index  = Eigen::Index;

/// Base class for all solver errors. The driver converts these into a
/// NumericalFailure termination naming the failing subsystem.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A function or gradient evaluation produced a non-finite value.
class EvalFailure : public SolverError {
 public:
  EvalFailure(const std::string& what, Index index)
      : SolverError(what), index_(index) {}

  /// Index of the offending quantity: -1 for the objective, otherwise the
  /// constraint row.
  Index index() const { return index_; }

 private:
  Index index_;
};

/// Cholesky factorization still failed after the maximal diagonal shift.
class FactorizationFailure : public SolverError {
 public:
  using SolverError::SolverError;
};

/// The null-space QP could not be solved to the required optimality.
class QpFailure : public SolverError {
 public:
  using SolverError::SolverError;
};

/// The backtracking line search exhausted its trial budget.
class LineSearchFailure : public SolverError {
 public:
  using SolverError::SolverError;
};

/// A file did not match the expected CSV/JSON schema.
class FormatError : public SolverError {
 public:
  using SolverError::SolverError;
};

}  // namespace pdip
