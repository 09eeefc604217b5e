#pragma once

#include "pdip/problem.hpp"
#include "pdip/slack.hpp"
#include "pdip/subproblem.hpp"
#include "pdip/types.hpp"

namespace pdip {

/// Per-iteration record of the merit machinery, kept for run-log audits.
struct MeritContext {
  double merit_before = 0.0;
  double merit_after = 0.0;
  double pi = 0.0;
  double pred_decrease = 0.0;  ///< Delta = ||r|| - ||r + R^T d||
  double dQd = 0.0;
  double xi_before = 1.0;
  double xi_after = 1.0;
  double alpha = 1.0;
  int backtracks = 0;
};

/// Merit function Phi_xi(x,u; beta,rho) =
///   xi rho f(x) - xi rho beta sum_i ln y_i + ||c(x) + y||,
/// with the barrier sum over inequality rows only; equality rows enter the
/// residual norm alone.
double merit(const Problem& problem, const Vector& x, const Vector& u,
             double beta, double rho, double xi);

/// Same, reusing an existing evaluation of (f, c) at x.
double merit_from_values(const Problem& problem, const Evaluation& vals,
                         const Vector& u, double beta, double rho, double xi);

/// Directional-derivative surrogate
///   pi_xi(d) = xi (rho grad f^T dx + sum_i rho beta/(y_i+lambda_i)
///                  (grad c_i^T dx + rho du_i)) + ||r + R^T d|| - ||r||,
/// an upper bound on the one-sided derivative of the merit function. The
/// xi-linear part equals grad_lin of the step; the trailing difference is
/// -pred_decrease.
double pi_value(const StepResult& step, double xi);

struct XiUpdate {
  double xi = 1.0;
  bool changed = false;
  bool hit_floor = false;
};

/// Penalty update: keep xi when xi (D + dQd/2) <= delta * Delta already
/// holds, otherwise at least halve it (0.9 safety factor on the closed-form
/// threshold). The caps xi ||g||_inf <= 0.1 and
/// xi (max(rho u))^1.1 <= 1 (inactive when max(rho u) <= 0) are applied on
/// top; any change is by a factor of at least one half, and the closed-form
/// reduction is bounded to a factor of 1/32 per pass. Hitting `floor`
/// signals a stall to the driver.
XiUpdate update_xi(double xi, double grad_lin, double delta, double pred_decrease,
                   double dQd, double g_inf, double rho_u_max,
                   double floor = 1e-16);

struct LineSearchResult {
  double alpha = 1.0;
  int backtracks = 0;
  Vector x_new;
  Vector u_hat;        ///< dual trial point before the safeguard
  Evaluation vals_new; ///< f, c at x_new
  double merit_old = 0.0;
  double merit_new = 0.0;
};

/// Backtracking Armijo search: the largest alpha in {1, delta, delta^2, ...}
/// with Phi(z + alpha d) - Phi(z) <= sigma alpha pi. Evaluation failures at a
/// trial point count as a rejected step. Throws LineSearchFailure after
/// `max_backtracks` rejections.
LineSearchResult line_search(const Problem& problem, const Iterate& iterate,
                             const StepResult& step, double xi, double beta,
                             double rho, double sigma, double delta,
                             int max_backtracks = 50);

/// Dual safeguard keeping c + y >= 0 on inequality rows:
/// u_i = u_hat_i when c_i >= 0, else min(u_hat_i, -beta/c_i). Equality rows
/// pass through unchanged.
Vector dual_safeguard(const Problem& problem, const Vector& c_new,
                      const Vector& u_hat, double beta);

}  // namespace pdip
