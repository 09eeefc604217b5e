#include "pdip/slack.hpp"

#include <cmath>

namespace pdip {

SlackPair eval_slack(double c, double u, double beta, double rho) {
  if (!std::isfinite(c)) {
    throw EvalFailure("eval_slack: non-finite constraint value", -1);
  }
  const double w = c + rho * u;
  const double root = std::hypot(w, 2.0 * std::sqrt(rho * beta));
  SlackPair out;
  if (w >= 0.0) {
    // y = (root - w)/2 cancels; rationalize.
    out.lambda = 0.5 * (root + w);
    out.y = (rho * beta) / out.lambda;
  } else {
    out.y = 0.5 * (root - w);
    out.lambda = (rho * beta) / out.y;
  }
  return out;
}

SlackState slack_state_from_values(const Problem& problem, const Vector& c,
                                   const Vector& u, double beta, double rho) {
  const Index mt = problem.num_constraints();
  SlackState s;
  s.y.resize(mt);
  s.lambda.resize(mt);
  s.nu.resize(mt);
  s.r.resize(mt);
  s.ylam.resize(mt);
  for (Index i = 0; i < mt; ++i) {
    if (problem.constraints[static_cast<std::size_t>(i)].kind ==
        ConstraintKind::Equality) {
      s.y[i] = 0.0;
      s.lambda[i] = rho * u[i] + c[i];
      s.nu[i] = 1.0;
      s.r[i] = c[i];
      s.ylam[i] = s.lambda[i];
    } else {
      const SlackPair p = eval_slack(c[i], u[i], beta, rho);
      s.y[i] = p.y;
      s.lambda[i] = p.lambda;
      s.ylam[i] = p.y + p.lambda;
      s.nu[i] = p.lambda / s.ylam[i];
      s.r[i] = c[i] + p.y;
    }
  }
  return s;
}

SlackState eval_slack_state(const Problem& problem, const Vector& x,
                            const Vector& u, double beta, double rho) {
  return slack_state_from_values(problem, eval(problem, x).c, u, beta, rho);
}

Vector eval_phi(const Problem& problem, const Iterate& iterate,
                const GradientEvaluation& grads, double rho) {
  const Index n = problem.n;
  const Index mt = problem.num_constraints();
  Vector phi(n + mt);
  phi.head(n) = rho * grads.grad_f + grads.jacobian.transpose() * iterate.slack.lambda;
  phi.tail(mt) = rho * iterate.slack.r;
  return phi;
}

Vector eval_psi(const Problem& problem, const Vector& x, const Vector& u,
                const GradientEvaluation& grads, double beta,
                double rho_scaled) {
  const Evaluation vals = eval(problem, x);
  const SlackState scaled =
      slack_state_from_values(problem, vals.c, u, beta, rho_scaled);
  return rho_scaled * grads.grad_f + grads.jacobian.transpose() * scaled.lambda;
}

SlackDerivatives slack_derivatives(const Problem& problem,
                                   const SlackState& slack,
                                   const Matrix& jacobian, double rho) {
  const Index m = problem.num_inequalities();
  const Index n = jacobian.cols();
  SlackDerivatives d;
  d.dy_dx.resize(m, n);
  d.dlambda_dx.resize(m, n);
  d.dy_du.resize(m);
  d.dlambda_du.resize(m);
  for (Index i = 0; i < m; ++i) {
    // 1 - nu evaluated as y/(y+lambda): the subtraction cancels totally once
    // y drops below an ulp of lambda.
    const double nu = slack.nu[i];
    const double co_nu = slack.y[i] / slack.ylam[i];
    d.dy_dx.row(i) = -co_nu * jacobian.row(i);
    d.dlambda_dx.row(i) = nu * jacobian.row(i);
    d.dy_du[i] = -rho * co_nu;
    d.dlambda_du[i] = rho * nu;
  }
  return d;
}

}  // namespace pdip
