#pragma once

#include <vector>

#include "pdip/problem.hpp"
#include "pdip/slack.hpp"
#include "pdip/types.hpp"

namespace pdip {

/// Matrices and vectors defining one QP solve in the full primal-dual space
/// of dimension n + mt (mt = number of constraints = dual dimension).
///
/// Column i of R is (nu_i grad c_i ; -rho (y_i/(y_i+lambda_i)) e_i); for
/// equality rows nu_i = 1 and the lower block vanishes. Q is the quadratic
/// form of the tangential model; its per-constraint contribution is
/// nu_i(1-nu_i) (grad c_i ; rho e_i)(grad c_i ; rho e_i)^T, which equality
/// rows do not contribute to. B = H + sum_i nu_i grad c_i grad c_i^T.
struct SubproblemData {
  Matrix R;     ///< (n+mt) x mt
  Matrix Q;     ///< (n+mt) x (n+mt), symmetric
  Matrix B;     ///< n x n
  Vector grad;  ///< linear term of the model objective, (n+mt)
  Vector r;     ///< residual c + y, mt

  Index n = 0;
  Index m = 0;   ///< inequality count
  Index mt = 0;  ///< total constraint count
  double beta = 0.0;
  double rho = 0.0;
  /// Inequality rows whose dual direction joins the QP; the others take a
  /// zero dual step this pass. A row is kept out when the dual cannot do
  /// real work there: when its slack is far smaller than its residual (the
  /// linear model then promises residual cuts the saturating slack cannot
  /// deliver, at enormous dual moves), or when the barrier pull
  /// (y+lambda)/rho exceeds the cap (the dual is then nearly untied from
  /// the residual altogether).
  std::vector<Index> qp_dual_rows;
  /// Row scaling rho(1-nu_i) applied to the dual directions inside the
  /// solves. In the scaled variable the constraint entries are -1 and the
  /// arithmetic stays well conditioned when active rows approach nu = 1;
  /// the step itself is unchanged.
  Vector dual_scale;
  Vector nu;
  Vector lambda;
  Vector ylam;
  Matrix jacobian;
  Vector grad_f;
};

SubproblemData build_subproblem(const Problem& problem, const Iterate& iterate,
                                const GradientEvaluation& grads,
                                const Matrix& hessian, const Params& params);

/// Residual-reducing normal step: the minimal-norm least-squares solution of
/// R^T d = -r, which removes the attainable part of the linearized residual
/// (||r + R^T d^c|| is then the unattainable remainder, as the local rate
/// theory needs). When that solution is longer than t_max ||R r|| it is
/// replaced by the damped Cauchy step -t R r with t minimizing
/// ||r - t R^T R r||^2 truncated to t_max. Either way the step is verified
/// a posteriori against the conditions
///
///   (i)  ||d^c|| <= eta1 ||R r||          with eta1 = t_max,
///   (ii) ||r|| - ||r + R^T d^c|| >= eta2 ||R r||^2 / ||r||
///        with eta2 = t/2, the guarantee the Cauchy step provides,
///
/// and the achieved constants are recorded for auditing. r = 0 yields
/// d^c = 0; ||R r|| ~ 0 with ||r|| > 0 yields d^c = 0 with the
/// rank-deficiency flag raised (the signal that the residual is stationary).
struct NormalStep {
  Vector dc;  ///< in the reduced space the caller's R lives in
  double t = 0.0;              ///< damped Cauchy length (fallback and bound)
  double cauchy_norm = 0.0;    ///< length of the damped Cauchy point
  double radius = 0.0;         ///< trust radius that was in effect
  double decrease = 0.0;       ///< ||r|| - ||r + R^T d^c||, evaluated stably
  double eta1_achieved = 0.0;  ///< ||d^c|| / ||R r||
  double eta2_achieved = 0.0;  ///< decrease * ||r|| / ||R r||^2
  double rr_ratio = 0.0;       ///< ||R r|| / ||r||, the residual-stationarity signal
  bool least_squares = false;  ///< true when the full least-squares point fit
  bool rank_deficient = false;
  bool conditions_ok = true;
};

/// `radius` is the trust region for the dogleg; nonpositive means "fresh
/// stage", which starts at twice the Cauchy length. The radius never exceeds
/// t_max ||R r|| (condition (i)) and never falls below the Cauchy length.
NormalStep normal_step(const Matrix& R, const Vector& r, double t_max,
                       double radius = 0.0);

/// Solution of the tangential subproblem
///
///   min  grad^T d + (1/2) d^T Q d   s.t.  R^T d = R^T d^c,
///
/// computed as d = d^c + W p with W = nullspace_basis(R) over the reduced
/// variable space and p from a Cholesky solve of the reduced system. Dual
/// directions outside that space (equality rows, which carry no curvature,
/// and the frozen rows of qp_dual_rows) take du = 0 there; equality
/// multipliers and dual steps are recovered afterwards from the first-order
/// conditions (least squares on the stationarity block).
struct StepResult {
  Vector dx;  ///< n
  Vector du;  ///< mt
  Vector g;   ///< QP multiplier, mt
  Vector dc;  ///< the normal step used, n + mt

  double pred_decrease = 0.0;  ///< ||r|| - ||r + R^T d||
  double dQd = 0.0;
  double qhat = 0.0;      ///< model objective at d
  double grad_lin = 0.0;  ///< grad^T d, the xi-linear part of pi
  double tau = 0.0;       ///< diagonal shift used by the reduced solve
  double projected_gradient = 0.0;
};

StepResult solve_nullspace_qp(const SubproblemData& sub, const NormalStep& normal);

/// Rows of R spanning the QP's variable space (the x block plus the dual
/// rows selected in build_subproblem), with the dual rows expressed in the
/// scaled variable. The normal step is computed against this matrix.
Matrix reduced_constraint_matrix(const SubproblemData& sub);

}  // namespace pdip
