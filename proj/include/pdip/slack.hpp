#pragma once

#include "pdip/problem.hpp"
#include "pdip/types.hpp"

namespace pdip {

/// Live algorithm parameters together with the fixed constants and the
/// parameter-update schedules.
struct Params {
  double beta = 0.1;  ///< barrier parameter, > 0 while the algorithm runs
  double rho = 1.0;   ///< scaling parameter, > 0 while the algorithm runs
  double xi = 1.0;    ///< merit penalty, <= 1, nonincreasing within an outer step

  double delta = 0.5;    ///< backtracking factor, in (0,1)
  double sigma = 1e-4;   ///< Armijo constant, in (0,1/2)
  double epsilon = 1e-8; ///< termination tolerance on beta and rho
  double eta1 = 1e4;     ///< normal-step damping cap (condition (i) constant)
  double eta2 = 1e-12;   ///< absolute floor for the achieved decrease constant
  double dual_pull_cap = 1e3;  ///< freeze dual directions pulling harder than this

  double theta1(double b) const { return 10.0 * b; }
  /// Declared alongside theta1 in the update schedule but never consulted by
  /// the parameter tests; kept for completeness.
  double theta2(double r) const { return r; }
};

/// Slack quantities derived from (x, u) under fixed (beta, rho). Inequality
/// rows carry the closed-form pair (y, lambda) with lambda*y = rho*beta;
/// equality rows carry no slack: y = 0, lambda = rho*u + c, nu = 1, r = c.
struct SlackState {
  Vector y;       ///< slack, > 0 on inequality rows, 0 on equality rows
  Vector lambda;  ///< multiplier estimate, > 0 on inequality rows
  Vector nu;      ///< lambda / (y + lambda), in (0,1) on inequality rows
  Vector r;       ///< residual c + y (inequalities), c (equalities)
  Vector ylam;    ///< y + lambda
};

/// Primal-dual point plus the slack state derived from it.
struct Iterate {
  Vector x;
  Vector u;
  SlackState slack;
};

struct SlackPair {
  double y = 0.0;
  double lambda = 0.0;
};

/// Closed-form solution of y^2 + (c + rho*u) y - rho*beta = 0 for one
/// inequality row:
///
///   y      = ( sqrt((c + rho u)^2 + 4 rho beta) - (c + rho u) ) / 2,
///   lambda = ( sqrt((c + rho u)^2 + 4 rho beta) + (c + rho u) ) / 2,
///
/// evaluated in the rationalized form 2 rho beta / (sqrt(...) + |c + rho u|)
/// for whichever of the two suffers cancellation. Both results are strictly
/// positive and satisfy lambda * y = rho * beta to full precision.
SlackPair eval_slack(double c, double u, double beta, double rho);

/// Vectorized eval_slack over all constraint rows of the problem, with the
/// equality-row specialization described on SlackState.
SlackState eval_slack_state(const Problem& problem, const Vector& x,
                            const Vector& u, double beta, double rho);

/// Same, but reusing already-evaluated constraint values.
SlackState slack_state_from_values(const Problem& problem, const Vector& c,
                                   const Vector& u, double beta, double rho);

/// Residual of the two-parameter primal-dual system, stacked as
///
///   [ rho grad f(x) + sum_i lambda_i grad c_i(x) ]   (n rows)
///   [ rho (c(x) + y)                             ]   (one row per constraint)
Vector eval_phi(const Problem& problem, const Iterate& iterate,
                const GradientEvaluation& grads, double rho);

/// Dual stationarity residual re-evaluated at a down-scaled rho,
///
///   psi = rho_scaled grad f + sum_i lambda_i(x,u; beta, rho_scaled) grad c_i,
///
/// used by the rho-reduction rule and to certify rapid infeasibility
/// detection.
Vector eval_psi(const Problem& problem, const Vector& x, const Vector& u,
                const GradientEvaluation& grads, double beta, double rho_scaled);

/// First derivatives of the slack closed forms on inequality rows
/// (all other u-derivatives vanish):
///
///   grad_x y_i      = -(y_i/(y_i+lambda_i)) grad c_i,
///   grad_x lambda_i =  (lambda_i/(y_i+lambda_i)) grad c_i,
///   d y_i/d u_i      = -rho y_i/(y_i+lambda_i),
///   d lambda_i/d u_i =  rho lambda_i/(y_i+lambda_i).
struct SlackDerivatives {
  Matrix dy_dx;      ///< m x n
  Matrix dlambda_dx; ///< m x n
  Vector dy_du;      ///< m (diagonal)
  Vector dlambda_du; ///< m (diagonal)
};

/// Evaluates the formulas above from the stored (y, lambda) so that
/// lambda*y = rho*beta stays consistent within one iteration. `jacobian`
/// must contain all constraint rows; only the first m (inequality) rows are
/// consumed.
SlackDerivatives slack_derivatives(const Problem& problem,
                                   const SlackState& slack,
                                   const Matrix& jacobian, double rho);

}  // namespace pdip
