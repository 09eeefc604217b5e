#include "pdip/solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace pdip {

std::string to_string(TerminationKind kind) {
  switch (kind) {
    case TerminationKind::Kkt: return "kkt";
    case TerminationKind::InfeasibleStationary: return "infeasible_stationary";
    case TerminationKind::SingularStationary: return "singular_stationary";
    case TerminationKind::IterationLimit: return "iteration_limit";
    case TerminationKind::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

BfgsUpdate damped_bfgs_update(const Matrix& H, const Vector& s, const Vector& yv,
                              double reset_scale, double floor) {
  const Index n = H.rows();
  BfgsUpdate out{H, 1.0, false};
  auto reset = [&] {
    out.H = reset_scale * Matrix::Identity(n, n);
    out.theta = 1.0;
    out.reset = true;
    return out;
  };

  if (s.norm() == 0.0) return out;
  const Vector Hs = H * s;
  const double sHs = s.dot(Hs);
  if (!(sHs > 0.0)) return reset();

  const double sy = s.dot(yv);
  double theta = 1.0;
  Vector y_tilde = yv;
  if (sy < 0.2 * sHs) {
    theta = 0.8 * sHs / (sHs - sy);
    y_tilde = theta * yv + (1.0 - theta) * Hs;
  }
  const double sty = s.dot(y_tilde);
  if (!(sty > 0.0)) return reset();

  Matrix updated = H - (Hs * Hs.transpose()) / sHs +
                   (y_tilde * y_tilde.transpose()) / sty;
  updated = 0.5 * (updated + updated.transpose());

  // Positive definiteness with the spectral floor; damping should preserve
  // it, so a failure here is a roundoff degeneracy.
  Eigen::LLT<Matrix> llt(updated - floor * Matrix::Identity(n, n));
  if (llt.info() != Eigen::Success) return reset();

  out.H = updated;
  out.theta = theta;
  return out;
}

InitState initialize(const Problem& problem, const Vector& x0,
                     const RunConfig& config) {
  InitState st;
  st.vals = eval(problem, x0);
  st.grads = eval_gradients(problem, x0);

  const double v0 = violation(problem, st.vals.c).norm();
  const double denom = std::abs(st.vals.f) < 1e-12 ? 1.0 : std::abs(st.vals.f);
  const double rho0 = std::min(100.0, std::max(1.0, v0 / denom));

  st.params.beta = config.beta0;
  st.params.rho = rho0;
  st.params.xi = 1.0;
  st.params.delta = config.delta;
  st.params.sigma = config.sigma;
  st.params.epsilon = config.epsilon;
  st.params.eta1 = config.t_max;

  st.iterate.x = x0;
  st.iterate.u = Vector::Zero(problem.num_constraints());
  st.iterate.slack = slack_state_from_values(problem, st.vals.c, st.iterate.u,
                                             st.params.beta, st.params.rho);
  st.hessian.H = rho0 * Matrix::Identity(problem.n, problem.n);
  return st;
}

namespace {

double merit_from_slack(const Problem& problem, double f, const SlackState& s,
                        double beta, double rho, double xi) {
  double barrier = 0.0;
  for (Index i = 0; i < problem.num_inequalities(); ++i) barrier += std::log(s.y[i]);
  return xi * rho * f - xi * rho * beta * barrier + s.r.norm();
}

double psi_inf_at(const Problem& problem, const Vector& c, const Vector& u,
                  const GradientEvaluation& grads, double beta, double xi,
                  double rho) {
  const double rho_scaled = std::max(xi * rho, 1e-300);
  const SlackState scaled =
      slack_state_from_values(problem, c, u, beta, rho_scaled);
  const Vector psi =
      rho_scaled * grads.grad_f + grads.jacobian.transpose() * scaled.lambda;
  return psi.lpNorm<Eigen::Infinity>();
}

}  // namespace

InnerOutcome inner_iteration(const Problem& problem, InnerState& state,
                             const RunConfig& config) {
  const double beta = state.params.beta;
  const double rho = state.params.rho;

  const SubproblemData sub =
      build_subproblem(problem, state.iterate, state.grads, state.hessian.H,
                       state.params);
  const NormalStep normal = normal_step(reduced_constraint_matrix(sub), sub.r,
                                        config.t_max, state.trust_radius);
  const StepResult step = solve_nullspace_qp(sub, normal);

  const double r_norm_before = state.iterate.slack.r.norm();
  const double xi_before = state.params.xi;
  const double g_inf = step.g.size() > 0 ? step.g.lpNorm<Eigen::Infinity>() : 0.0;
  const double rho_u_max = rho * state.iterate.u.maxCoeff();
  const XiUpdate xi_upd =
      update_xi(state.params.xi, step.grad_lin, state.params.delta,
                step.pred_decrease, step.dQd, g_inf, rho_u_max, config.xi_floor);
  state.params.xi = xi_upd.xi;

  // Residual stagnation: the step cannot reduce ||r|| by even one percent.
  // The merit test is then vacuous for any xi, so drive xi down here; this
  // is the mechanism that lets the rho-reduction branch fire at points that
  // are stationary for the infeasibility measure.
  const bool stalled = step.pred_decrease < 0.01 * r_norm_before;
  if (stalled) {
    state.params.xi = std::max(0.5 * state.params.xi, config.xi_floor);
  }

  const LineSearchResult ls =
      line_search(problem, state.iterate, step, state.params.xi, beta, rho,
                  state.params.sigma, state.params.delta, config.max_backtracks);

  Vector u_new = dual_safeguard(problem, ls.vals_new.c, ls.u_hat, beta);

  // The merit function does not see equality duals, so a dual iterate that
  // integrates Newton steps has nothing to globalize it. Equality duals are
  // therefore assigned, not stepped: u_eq is set so that lambda_eq at the
  // new point equals the least-squares multiplier of the dual block there.
  // That estimate is bounded by problem scale at any iterate and converges
  // quadratically with x, so the assignment is exactly the Newton value
  // near a solution.
  const Index m_ineq = problem.num_inequalities();
  const Index p_eq = problem.num_constraints() - m_ineq;
  GradientEvaluation grads_new = eval_gradients(problem, ls.x_new);
  if (p_eq > 0) {
    const SlackState partial =
        slack_state_from_values(problem, ls.vals_new.c, u_new, beta, rho);
    const Matrix eq_grads = grads_new.jacobian.bottomRows(p_eq).transpose();
    const Vector rhs_eq =
        -(rho * grads_new.grad_f +
          grads_new.jacobian.topRows(m_ineq).transpose() *
              partial.lambda.head(m_ineq));
    const Vector lambda_eq = eq_grads.colPivHouseholderQr().solve(rhs_eq);
    for (Index j = 0; j < p_eq; ++j) {
      u_new[m_ineq + j] = (lambda_eq[j] - ls.vals_new.c[m_ineq + j]) / rho;
    }
  }
  const SlackState slack_new =
      slack_state_from_values(problem, ls.vals_new.c, u_new, beta, rho);

  // Eq. c + y >= 0 must hold after the safeguard, up to roundoff.
  double r_min = 0.0;
  for (Index i = 0; i < problem.num_inequalities(); ++i) {
    r_min = std::min(r_min, slack_new.r[i]);
    if (slack_new.r[i] < -1e-10 * (1.0 + std::abs(ls.vals_new.c[i]))) {
      throw SolverError("dual safeguard: residual row " + std::to_string(i) +
                        " negative after update");
    }
  }

  const double merit_after =
      merit_from_slack(problem, ls.vals_new.f, slack_new, beta, rho,
                       state.params.xi);
  if (merit_after - ls.merit_old > 1e-10 * (1.0 + std::abs(ls.merit_old))) {
    throw SolverError("merit function increased across an accepted step");
  }

  // Trust-radius feedback for the next normal step: full steps widen the
  // region toward the least-squares point, backtracks shrink it.
  const double radius_used = normal.radius > 0.0 ? normal.radius : 1.0;
  state.trust_radius =
      ls.alpha == 1.0 ? 4.0 * radius_used : std::max(ls.alpha, 0.25) * radius_used;

  Iterate next;
  next.x = ls.x_new;
  next.u = u_new;
  next.slack = slack_new;

  const Vector phi = eval_phi(problem, next, grads_new, rho);

  InnerOutcome out;
  out.phi_inf = phi.lpNorm<Eigen::Infinity>();
  out.psi_inf = psi_inf_at(problem, ls.vals_new.c, u_new, grads_new, beta,
                           state.params.xi, rho);
  out.pred_decrease = step.pred_decrease;
  out.r_norm_before = r_norm_before;
  out.rr_ratio = normal.rr_ratio;
  out.stalled = stalled;
  out.lambda_inf = slack_new.lambda.lpNorm<Eigen::Infinity>();

  Vector d_full(problem.n + problem.num_constraints());
  d_full.head(problem.n) = step.dx;
  d_full.tail(problem.num_constraints()) = step.du;
  out.step_norm = d_full.norm();

  // BFGS pair: gradient difference of grad_x L_rho(x, lambda) with lambda
  // frozen at the post-step value.
  state.pending_s = ls.x_new - state.iterate.x;
  state.pending_yv =
      (rho * grads_new.grad_f + grads_new.jacobian.transpose() * slack_new.lambda) -
      (rho * state.grads.grad_f +
       state.grads.jacobian.transpose() * slack_new.lambda);

  out.merit.merit_before = ls.merit_old;
  out.merit.merit_after = merit_after;
  out.merit.pi = pi_value(step, state.params.xi);
  out.merit.pred_decrease = step.pred_decrease;
  out.merit.dQd = step.dQd;
  out.merit.xi_before = xi_before;
  out.merit.xi_after = state.params.xi;
  out.merit.alpha = ls.alpha;
  out.merit.backtracks = ls.backtracks;

  InnerRow& row = out.row;
  row.k = state.k + 1;
  row.f = ls.vals_new.f;
  row.v = violation(problem, ls.vals_new.c).norm();
  row.phi_inf = out.phi_inf;
  row.psi_inf = out.psi_inf;
  row.alpha = ls.alpha;
  row.backtracks = ls.backtracks;
  row.xi = state.params.xi;
  row.merit_before = ls.merit_old;
  row.merit_after = merit_after;
  row.pred_decrease = step.pred_decrease;
  row.dQd = step.dQd;
  row.r_min = r_min;
  row.normal_t = normal.t;
  row.eta1 = normal.eta1_achieved;
  row.eta2 = normal.eta2_achieved;
  row.g_inf = g_inf;
  row.step_norm = out.step_norm;
  row.rr_ratio = normal.rr_ratio;
  row.normal_ok = normal.conditions_ok;
  row.normal_least_squares = normal.least_squares;
  row.rank_deficient = normal.rank_deficient;
  row.stalled = stalled;
  row.xi_floor_hit = xi_upd.hit_floor;
  row.x = ls.x_new;

  state.iterate = std::move(next);
  state.vals = ls.vals_new;
  state.grads = grads_new;
  state.k += 1;
  return out;
}

TerminationKind classify_termination(bool beta_crossed_first, double v_inf,
                                     double feasibility_tol) {
  if (beta_crossed_first) return TerminationKind::Kkt;
  return v_inf > feasibility_tol ? TerminationKind::InfeasibleStationary
                                 : TerminationKind::SingularStationary;
}

namespace {

enum class Branch { None, Beta, Rho };

Terminal build_terminal(const Problem& problem, const InnerState& state,
                        TerminationKind kind, const OuterRow& last_row,
                        std::string detail) {
  Terminal t;
  t.kind = kind;
  t.x = state.iterate.x;
  t.u = state.iterate.u;
  t.f = state.vals.f;
  const Vector viol = violation(problem, state.vals.c);
  t.v = viol.norm();
  t.v_inf = viol.lpNorm<Eigen::Infinity>();
  t.phi_inf = last_row.phi_inf;
  t.psi_inf = last_row.psi_inf;
  t.beta = state.params.beta;
  t.rho = state.params.rho;
  t.detail = std::move(detail);
  t.stationarity_inf =
      (state.grads.jacobian.transpose() * viol).lpNorm<Eigen::Infinity>();
  t.null_multiplier = Vector::Zero(problem.num_constraints());

  if (kind == TerminationKind::SingularStationary) {
    // Direction annihilating the active-constraint gradients, from the
    // smallest singular value of the (n x active) gradient matrix. The
    // activity tolerance is absolute: the terminal point can sit strictly
    // inside the feasible set at distance ~sqrt(v) from the degenerate
    // boundary it converged to.
    const double active_tol = std::max(1e-4, 2.0 * t.v_inf);
    std::vector<Index> active;
    for (Index i = 0; i < problem.num_constraints(); ++i) {
      const bool eq = problem.constraints[static_cast<std::size_t>(i)].kind ==
                      ConstraintKind::Equality;
      if (eq || state.vals.c[i] >= -active_tol) active.push_back(i);
    }
    if (!active.empty()) {
      Matrix a(problem.n, static_cast<Index>(active.size()));
      for (std::size_t j = 0; j < active.size(); ++j) {
        a.col(static_cast<Index>(j)) = state.grads.jacobian.row(active[j]).transpose();
      }
      Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
      Vector b = svd.matrixV().col(svd.matrixV().cols() - 1);
      if (b.sum() < 0.0) b = -b;
      for (std::size_t j = 0; j < active.size(); ++j) {
        t.null_multiplier[active[j]] = b[static_cast<Index>(j)];
      }
    }
  }
  return t;
}

OuterRow make_row(const Problem& problem, int l, const Evaluation& vals,
                  double phi_inf, double psi_inf, double beta, double rho,
                  int inner_count) {
  OuterRow row;
  row.l = l;
  row.f = vals.f;
  row.v = violation(problem, vals.c).norm();
  row.phi_inf = phi_inf;
  row.psi_inf = psi_inf;
  row.beta = beta;
  row.rho = rho;
  row.inner_iterations = inner_count;
  return row;
}

}  // namespace


SolveReport solve(const Problem& problem, const RunConfig& config) {
  SolveReport report;
  report.problem = problem.name;
  report.config = config;

  InnerState state;
  try {
    validate(problem);
    const InitState init = initialize(problem, problem.start, config);
    state.params = init.params;
    state.iterate = init.iterate;
    state.vals = init.vals;
    state.grads = init.grads;
    state.hessian = init.hessian;
  } catch (const std::exception& e) {
    report.terminal.kind = TerminationKind::NumericalFailure;
    report.terminal.detail = std::string("initialization: ") + e.what();
    return report;
  }

  // Row 0: the start point under the initial parameters.
  {
    const Vector phi0 =
        eval_phi(problem, state.iterate, state.grads, state.params.rho);
    const double psi0 =
        psi_inf_at(problem, state.vals.c, state.iterate.u, state.grads,
                   state.params.beta, 1.0, state.params.rho);
    report.rows.push_back(make_row(problem, 0, state.vals,
                                   phi0.lpNorm<Eigen::Infinity>(), psi0,
                                   state.params.beta, state.params.rho, 0));
  }

  const double eps = config.epsilon;
  int l = 0;
  bool polishing = false;
  bool beta_crossed_first = false;

  auto classified = [&](const std::string& detail) {
    const double v_inf =
        violation(problem, state.vals.c).lpNorm<Eigen::Infinity>();
    return build_terminal(
        problem, state,
        classify_termination(beta_crossed_first, v_inf, config.feasibility_tol),
        report.rows.back(), detail);
  };

  try {
    while (true) {
      if (!polishing && (state.params.beta <= eps || state.params.rho <= eps)) {
        beta_crossed_first = state.params.beta <= eps;
        report.terminal = classified("");
        return report;
      }

      // Step 2.0: fresh inner algorithm under the current (beta, rho). The
      // penalty resets to 1; curvature carries over from the previous stage.
      const double beta_l = state.params.beta;
      const double rho_l = state.params.rho;
      state.params.xi = 1.0;
      if (config.reset_hessian_each_stage) {
        state.hessian.H = rho_l * Matrix::Identity(problem.n, problem.n);
      }
      state.k = 0;
      state.trust_radius = 0.0;

      Branch branch = Branch::None;
      InnerOutcome outcome;
      int rho_signal_streak = 0;
      while (true) {
        if (report.total_iterations >= config.max_total_iterations) break;
        outcome = inner_iteration(problem, state, config);
        ++report.total_iterations;
        outcome.row.l = l + 1;
        if (config.record_inner) report.inner.push_back(outcome.row);

        // The scale factor is capped at one: for rho above one the raw
        // rho*theta1(beta) test is looser than the barrier ladder needs, and
        // stages would stop before doing any work.
        if (outcome.phi_inf <=
            std::min(rho_l, 1.0) * state.params.theta1(beta_l)) {
          branch = Branch::Beta;
          break;
        }
        // A collapsed xi signals convergence toward an infeasible or
        // singular stationary point only together with a companion: either
        // ||R r||/||r|| -> 0 (the residual is stationary) or the pass is a
        // fixed point that the phi test cannot claim (feasible, but the
        // duals cannot balance, as at degenerate geometries). The signal
        // must persist for a few passes: right after the primal settles
        // there is a short window where the dual is still converging toward
        // the phi test, and cutting rho there would misclassify a perfectly
        // solvable stage.
        const double iterate_scale =
            1.0 + state.iterate.x.norm() + state.iterate.u.norm();
        const bool residual_stationary =
            outcome.rr_ratio <= 0.1 && outcome.r_norm_before > 0.0;
        const bool fixed_point = outcome.step_norm <= 1e-10 * iterate_scale;
        if (state.params.xi <= 0.1 * std::min(std::sqrt(rho_l), 1.0) &&
            (residual_stationary || fixed_point)) {
          ++rho_signal_streak;
        } else {
          rho_signal_streak = 0;
        }
        if (rho_signal_streak >= 3) {
          branch = Branch::Rho;
          break;
        }
        // The final sweep runs just long enough for the fresh parameters to
        // settle (the dual block needs a second Newton pass after a large
        // cut), never more than a handful of steps.
        if (polishing && state.k >= 10) break;
        if (state.k >= config.max_inner_per_outer) break;

        const BfgsUpdate upd =
            damped_bfgs_update(state.hessian.H, state.pending_s,
                               state.pending_yv, rho_l, config.hessian_floor);
        state.hessian.H = upd.H;
        state.hessian.theta = upd.theta;
        if (upd.reset) ++state.hessian.resets;
      }

      if (state.k == 0) {
        // Budget exhausted before this pass could take a single step.
        report.terminal = polishing
                              ? classified("iteration budget ended the final sweep")
                              : build_terminal(problem, state,
                                               TerminationKind::IterationLimit,
                                               report.rows.back(),
                                               "total iteration budget exhausted");
        return report;
      }

      // Step 3: parameter update from the iterate that stopped the inner loop.
      double beta_next = beta_l;
      double rho_next = rho_l;
      if (branch == Branch::Beta) {
        beta_next =
            std::max(std::min(0.1 * beta_l, std::pow(outcome.phi_inf, 1.5)),
                     config.param_floor);
      } else if (branch == Branch::Rho) {
        double cand = state.params.xi * rho_l;
        if (outcome.pred_decrease < 0.01 * outcome.r_norm_before) {
          const double lam = std::max(outcome.lambda_inf, 1e-12);
          cand = std::min({cand, outcome.psi_inf * outcome.psi_inf,
                           (rho_l / lam) * (rho_l / lam)});
        }
        rho_next = std::max(cand, config.param_floor);
      }

      if (polishing) {
        state.params.beta = beta_next;
        state.params.rho = rho_next;
        ++l;
        report.rows.push_back(make_row(problem, l, state.vals, outcome.phi_inf,
                                       outcome.psi_inf, beta_next, rho_next,
                                       state.k));
        report.terminal = classified("");
        return report;
      }

      const bool finishing = beta_next <= eps || rho_next <= eps;
      if (finishing) {
        beta_crossed_first = beta_next <= eps;
        if (config.final_sweep) {
          // Hold the finishing parameter just below epsilon for one last
          // sweep; it supplies the terminal residual row of the table.
          polishing = true;
          beta_next = std::max(beta_next, 0.1 * eps);
          rho_next = std::max(rho_next, 0.1 * eps);
        }
      }

      state.params.beta = beta_next;
      state.params.rho = rho_next;
      ++l;
      report.rows.push_back(make_row(problem, l, state.vals, outcome.phi_inf,
                                     outcome.psi_inf, beta_next, rho_next,
                                     state.k));

      if (branch == Branch::None) {
        report.terminal = build_terminal(
            problem, state, TerminationKind::IterationLimit, report.rows.back(),
            report.total_iterations >= config.max_total_iterations
                ? "total iteration budget exhausted"
                : "inner loop stalled without a parameter update");
        return report;
      }
      if (finishing && !config.final_sweep) {
        report.terminal = classified("");
        return report;
      }
    }
  } catch (const SolverError& e) {
    report.terminal = build_terminal(problem, state,
                                     TerminationKind::NumericalFailure,
                                     report.rows.back(), e.what());
    return report;
  }
}

}  // namespace pdip
