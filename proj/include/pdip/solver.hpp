#pragma once

#include <string>
#include <vector>

#include "pdip/globalization.hpp"
#include "pdip/problem.hpp"
#include "pdip/slack.hpp"
#include "pdip/subproblem.hpp"
#include "pdip/types.hpp"

namespace pdip {

struct RunConfig {
  double beta0 = 0.1;
  double delta = 0.5;
  double sigma = 1e-4;
  double epsilon = 1e-8;
  int max_total_iterations = 1000;  ///< budget of QP solves over the whole run
  int max_inner_per_outer = 200;    ///< stall guard for one inner algorithm
  int max_backtracks = 50;
  double t_max = 1e4;          ///< damping cap of the normal step
  double xi_floor = 1e-16;
  double param_floor = 1e-300; ///< underflow guard on beta and rho updates
  double hessian_floor = 1e-12;
  /// Infeasibility threshold (on ||violation||_inf) separating infeasible
  /// from singular stationary points once rho has converged.
  double feasibility_tol = 1e-2;
  /// Run one last inner pass with the finishing parameter held at 0.1*epsilon
  /// before stopping; this is what produces the final sub-epsilon residual
  /// row of the iteration tables.
  bool final_sweep = true;
  /// Restart the quasi-Newton matrix at rho*I on every parameter change
  /// instead of carrying curvature across stages.
  bool reset_hessian_each_stage = false;
  bool record_inner = true;
};

enum class TerminationKind {
  Kkt,
  InfeasibleStationary,
  SingularStationary,
  IterationLimit,
  NumericalFailure,
};

std::string to_string(TerminationKind kind);

/// One line of the outer-iteration table: values at the iterate z_l produced
/// by outer step l-1, the residual norms that drove the parameter update, the
/// parameters the next inner loop will run under, and the inner-iteration
/// count k that produced z_l.
struct OuterRow {
  int l = 0;
  double f = 0.0;
  double v = 0.0;  ///< ||violation||_2
  double phi_inf = 0.0;
  double psi_inf = 0.0;
  double beta = 0.0;
  double rho = 0.0;
  int inner_iterations = 0;
};

/// One inner iteration, kept for run-log audits and --inner-log output.
struct InnerRow {
  int l = 0;
  int k = 0;
  double f = 0.0;
  double v = 0.0;
  double phi_inf = 0.0;
  double psi_inf = 0.0;
  double alpha = 1.0;
  int backtracks = 0;
  double xi = 1.0;
  double merit_before = 0.0;
  double merit_after = 0.0;
  double pred_decrease = 0.0;
  double dQd = 0.0;
  double r_min = 0.0;  ///< min inequality residual after the dual safeguard
  double normal_t = 0.0;
  double eta1 = 0.0;
  double eta2 = 0.0;
  double g_inf = 0.0;
  double step_norm = 0.0;
  double rr_ratio = 0.0;
  bool normal_ok = true;
  bool normal_least_squares = false;
  bool rank_deficient = false;
  bool stalled = false;
  bool xi_floor_hit = false;
  Vector x;
};

struct Terminal {
  TerminationKind kind = TerminationKind::NumericalFailure;
  Vector x;
  Vector u;
  double f = 0.0;
  double v = 0.0;
  double v_inf = 0.0;
  double phi_inf = 0.0;
  double psi_inf = 0.0;
  double beta = 0.0;
  double rho = 0.0;
  /// ||J^T violation||_inf, the stationarity residual of the infeasibility
  /// measure (reported for rho-driven terminations).
  double stationarity_inf = 0.0;
  /// Near-null multiplier direction over the active constraints (singular
  /// terminations), zero on inactive rows.
  Vector null_multiplier;
  std::string detail;
};

struct SolveReport {
  std::string problem;
  RunConfig config;
  std::vector<OuterRow> rows;
  std::vector<InnerRow> inner;
  Terminal terminal;
  int total_iterations = 0;

  bool success() const {
    return terminal.kind == TerminationKind::Kkt ||
           terminal.kind == TerminationKind::InfeasibleStationary ||
           terminal.kind == TerminationKind::SingularStationary;
  }
};

struct HessianState {
  Matrix H;
  double theta = 1.0;  ///< damping factor of the last update
  int resets = 0;
};

struct BfgsUpdate {
  Matrix H;
  double theta = 1.0;
  bool reset = false;
};

/// Powell's damped BFGS update of H with the pair (s, yv):
/// theta = 1 when s^T yv >= 0.2 s^T H s, otherwise
/// theta = 0.8 s^T H s / (s^T H s - s^T yv), and the update uses
/// y~ = theta yv + (1-theta) H s (so that s^T y~ = 0.2 s^T H s exactly).
/// Degenerate input or loss of positive definiteness resets H to
/// reset_scale * I.
BfgsUpdate damped_bfgs_update(const Matrix& H, const Vector& s, const Vector& yv,
                              double reset_scale, double floor = 1e-12);

struct InitState {
  Params params;
  Iterate iterate;
  HessianState hessian;
  Evaluation vals;
  GradientEvaluation grads;
};

/// Start of a run: u0 = 0, beta0 from the config, xi = 1, H0 = rho0 * I, and
/// the initial penalty rho0 = min{100, max(1, ||max(0,c(x0))|| / |f(x0)|)}
/// (denominator replaced by 1 when |f(x0)| < 1e-12).
InitState initialize(const Problem& problem, const Vector& x0,
                     const RunConfig& config);

/// State of one inner algorithm at fixed (beta, rho).
struct InnerState {
  Params params;
  Iterate iterate;
  Evaluation vals;
  GradientEvaluation grads;
  HessianState hessian;
  int k = 0;
  double trust_radius = 0.0;  ///< normal-step radius, adapted per pass
  Vector pending_s;   ///< BFGS pair from the last pass
  Vector pending_yv;
};

struct InnerOutcome {
  double phi_inf = 0.0;
  double psi_inf = 0.0;
  double pred_decrease = 0.0;
  double r_norm_before = 0.0;
  double rr_ratio = 0.0;  ///< ||R r|| / ||r|| of the pass, 0 when r = 0
  bool stalled = false;
  double lambda_inf = 0.0;  ///< ||lambda(z_{k+1}; beta, rho)||_inf
  double step_norm = 0.0;
  MeritContext merit;  ///< the pass's merit bookkeeping
  InnerRow row;
};

/// One pass of the inner algorithm: normal step, null-space QP, penalty
/// update, line search, dual safeguard, slack re-evaluation. Leaves the BFGS
/// pair pending in the state; the caller applies it when the loop continues.
InnerOutcome inner_iteration(const Problem& problem, InnerState& state,
                             const RunConfig& config);

/// Pure termination decision. `beta_first` reports which parameter crossed
/// epsilon first (beta wins ties).
TerminationKind classify_termination(bool beta_crossed_first, double v_inf,
                                     double feasibility_tol);

/// Full run of the two-parameter interior-point algorithm. Deterministic:
/// identical inputs produce identical reports. Internal numerical failures
/// surface as a NumericalFailure termination naming the failing subsystem.
SolveReport solve(const Problem& problem, const RunConfig& config = RunConfig());

}  // namespace pdip
