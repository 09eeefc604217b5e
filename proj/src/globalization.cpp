#include "pdip/globalization.hpp"

#include <cmath>
#include <limits>

namespace pdip {

double merit_from_values(const Problem& problem, const Evaluation& vals,
                         const Vector& u, double beta, double rho, double xi) {
  const SlackState s = slack_state_from_values(problem, vals.c, u, beta, rho);
  double barrier = 0.0;
  for (Index i = 0; i < problem.num_inequalities(); ++i) {
    barrier += std::log(s.y[i]);
  }
  return xi * rho * vals.f - xi * rho * beta * barrier + s.r.norm();
}

double merit(const Problem& problem, const Vector& x, const Vector& u,
             double beta, double rho, double xi) {
  return merit_from_values(problem, eval(problem, x), u, beta, rho, xi);
}

double pi_value(const StepResult& step, double xi) {
  return xi * step.grad_lin - step.pred_decrease;
}

XiUpdate update_xi(double xi, double grad_lin, double delta, double pred_decrease,
                   double dQd, double g_inf, double rho_u_max, double floor) {
  XiUpdate out;
  const double delta_gain = delta * std::max(pred_decrease, 0.0);
  const double slope = grad_lin + 0.5 * dQd;

  double next = xi;
  if (slope > 0.0 && xi * slope > delta_gain) {
    // The closed-form threshold may shrink xi only geometrically; an
    // unbounded jump at a stagnating iterate (delta_gain ~ 0) would turn the
    // next rho cut into a free fall.
    next = std::min(0.5 * xi, std::max(0.9 * delta_gain / slope, xi / 32.0));
  }
  if (g_inf > 0.0) next = std::min(next, 0.1 / g_inf);
  if (rho_u_max > 0.0) next = std::min(next, std::pow(rho_u_max, -1.1));

  // Any change is at least a halving, except when stopped by the floor.
  if (next < xi) next = std::min(next, 0.5 * xi);
  if (next <= floor) {
    next = floor;
    out.hit_floor = true;
  }
  out.changed = next < xi;
  out.xi = next;
  return out;
}

LineSearchResult line_search(const Problem& problem, const Iterate& iterate,
                             const StepResult& step, double xi, double beta,
                             double rho, double sigma, double delta,
                             int max_backtracks) {
  LineSearchResult out;
  const double pi = pi_value(step, xi);
  out.merit_old =
      merit(problem, iterate.x, iterate.u, beta, rho, xi);

  // Tolerance of a few ulps against roundoff when the step is an exact
  // fixed point; anything larger widens the band where the search cannot
  // rank trial points and puts a floor under the terminal accuracy.
  const double slack =
      8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(out.merit_old));

  double alpha = 1.0;
  for (int j = 0; j <= max_backtracks; ++j) {
    const Vector x_trial = iterate.x + alpha * step.dx;
    const Vector u_trial = iterate.u + alpha * step.du;
    try {
      const Evaluation vals = eval(problem, x_trial);
      const double merit_trial =
          merit_from_values(problem, vals, u_trial, beta, rho, xi);
      if (merit_trial - out.merit_old <= sigma * alpha * pi + slack) {
        out.alpha = alpha;
        out.backtracks = j;
        out.x_new = x_trial;
        out.u_hat = u_trial;
        out.vals_new = vals;
        out.merit_new = merit_trial;
        return out;
      }
    } catch (const EvalFailure&) {
      // Non-finite trial: treat as rejected and shorten the step.
    }
    alpha *= delta;
  }
  throw LineSearchFailure("line search: no acceptable step within " +
                          std::to_string(max_backtracks) + " backtracks");
}

Vector dual_safeguard(const Problem& problem, const Vector& c_new,
                      const Vector& u_hat, double beta) {
  Vector u = u_hat;
  for (Index i = 0; i < problem.num_inequalities(); ++i) {
    if (c_new[i] < 0.0) {
      u[i] = std::min(u_hat[i], -beta / c_new[i]);
    }
  }
  return u;
}

}  // namespace pdip
