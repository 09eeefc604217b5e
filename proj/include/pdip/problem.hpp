#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "pdip/types.hpp"

namespace pdip {

enum class ConstraintKind { Inequality, Equality };

/// One scalar constraint. Inequalities use the convention c(x) <= 0,
/// equalities c(x) = 0. The gradient callback is optional; central finite
/// differences are substituted when it is absent.
struct Constraint {
  ConstraintKind kind = ConstraintKind::Inequality;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
};

/// A smooth nonlinear program
///
///   minimize f(x)  subject to  c_i(x) <= 0 (i in I),  c_j(x) = 0 (j in E).
///
/// Constraints are stored inequalities first, then equalities; all code in
/// this library relies on that ordering.
struct Problem {
  std::string name;
  Index n = 0;
  std::function<double(const Vector&)> objective;
  std::function<Vector(const Vector&)> objective_gradient;  ///< optional
  std::vector<Constraint> constraints;
  Vector start;  ///< standard initial point

  Index num_inequalities() const;
  Index num_equalities() const;
  Index num_constraints() const { return static_cast<Index>(constraints.size()); }
};

/// Checks the structural invariants: n >= 1, at least one constraint,
/// inequalities ordered before equalities, start point of dimension n.
/// Throws std::invalid_argument on violation.
void validate(const Problem& problem);

struct Evaluation {
  double f = 0.0;
  Vector c;  ///< all constraint values, inequalities first
};

/// Evaluates objective and constraints at x. Throws EvalFailure (carrying the
/// offending index, -1 for the objective) on non-finite values.
Evaluation eval(const Problem& problem, const Vector& x);

struct GradientEvaluation {
  Vector grad_f;    ///< n
  Matrix jacobian;  ///< one row per constraint
};

/// Analytic gradients where defined, otherwise central differences with step
/// h = 1e-6 * max(1, |x_i|) per coordinate. Throws EvalFailure on non-finite
/// entries.
GradientEvaluation eval_gradients(const Problem& problem, const Vector& x);

struct GradientCheckReport {
  double worst = 0.0;           ///< max relative deviation over all oracles
  Index worst_constraint = -2;  ///< -1 for the objective, else constraint row
  Index worst_coordinate = -1;
  double objective_deviation = 0.0;
  Vector constraint_deviations;  ///< per constraint row

  bool passed(double tol) const { return worst < tol; }
};

/// Compares analytic gradients against central finite differences and reports
/// the worst relative deviation per oracle. Rows without analytic gradients
/// trivially report zero.
GradientCheckReport check_gradients(const Problem& problem, const Vector& x);

/// Constraint violation vector: max(0, c_i) on inequality rows, c_j on
/// equality rows. ||.|| of this vector is the infeasibility measure v.
Vector violation(const Problem& problem, const Vector& c);

/// Built-in test problems, keyed by lower-case identifier (tp1..tp4).
class ProblemRegistry {
 public:
  static const ProblemRegistry& builtin();

  bool contains(const std::string& id) const;
  Problem make(const std::string& id) const;  ///< throws std::out_of_range
  std::vector<std::string> ids() const;

 private:
  std::map<std::string, Problem (*)()> makers_;
};

}  // namespace pdip
