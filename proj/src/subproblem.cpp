#include "pdip/subproblem.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>

#include "pdip/linalg.hpp"

namespace pdip {

SubproblemData build_subproblem(const Problem& problem, const Iterate& iterate,
                                const GradientEvaluation& grads,
                                const Matrix& hessian, const Params& params) {
  const Index n = problem.n;
  const Index m = problem.num_inequalities();
  const Index mt = problem.num_constraints();
  const double rho = params.rho;
  const double beta = params.beta;
  const SlackState& s = iterate.slack;

  SubproblemData sub;
  sub.n = n;
  sub.m = m;
  sub.mt = mt;
  sub.beta = beta;
  sub.rho = rho;
  sub.nu = s.nu;
  sub.lambda = s.lambda;
  sub.ylam = s.ylam;
  sub.jacobian = grads.jacobian;
  sub.grad_f = grads.grad_f;
  sub.r = s.r;

  sub.R = Matrix::Zero(n + mt, mt);
  sub.Q = Matrix::Zero(n + mt, n + mt);
  sub.B = hessian;
  sub.grad = Vector::Zero(n + mt);
  sub.grad.head(n) = rho * grads.grad_f;
  sub.dual_scale = Vector::Constant(mt, rho);

  sub.Q.topLeftCorner(n, n) = hessian;
  for (Index i = 0; i < mt; ++i) {
    const double nu = s.nu[i];
    // 1 - nu as y/(y+lambda); the subtraction cancels once y < ulp(lambda).
    const double co_nu = i < m ? s.y[i] / s.ylam[i] : 0.0;
    const Vector ci = grads.jacobian.row(i).transpose();
    sub.R.col(i).head(n) = nu * ci;
    sub.R(n + i, i) = -rho * co_nu;
    sub.B += nu * ci * ci.transpose();
    if (i < m) {
      // rho*beta/(y+lambda)^2 = nu(1-nu); zero on equality rows.
      const double w = nu * co_nu;
      sub.Q.topLeftCorner(n, n) += w * ci * ci.transpose();
      sub.Q.col(n + i).head(n) = rho * w * ci;
      sub.Q.row(n + i).head(n) = rho * w * ci.transpose();
      sub.Q(n + i, n + i) = rho * rho * w;
      const double lin = rho * beta / s.ylam[i];
      sub.grad.head(n) += lin * ci;
      sub.grad[n + i] = rho * lin;
      sub.dual_scale[i] = rho * co_nu;
      const bool slack_effective = s.y[i] >= 0.25 * std::abs(s.r[i]);
      if (slack_effective && s.ylam[i] <= params.dual_pull_cap * rho) {
        sub.qp_dual_rows.push_back(i);
      }
    }
  }
  return sub;
}

namespace {

// Rows of the full primal-dual space that take part in the QP: all of x plus
// the dual directions selected in build_subproblem.
std::vector<Index> qp_space(const SubproblemData& sub) {
  std::vector<Index> rows;
  rows.reserve(static_cast<std::size_t>(sub.n) + sub.qp_dual_rows.size());
  for (Index i = 0; i < sub.n; ++i) rows.push_back(i);
  for (Index i : sub.qp_dual_rows) rows.push_back(sub.n + i);
  return rows;
}

Matrix select_rows(const Matrix& a, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), a.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out.row(static_cast<Index>(k)) = a.row(rows[k]);
  }
  return out;
}

Matrix select_both(const Matrix& a, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (std::size_t j = 0; j < rows.size(); ++j) {
      out(static_cast<Index>(k), static_cast<Index>(j)) = a(rows[k], rows[j]);
    }
  }
  return out;
}

Vector select(const Vector& a, const std::vector<Index>& rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    out[static_cast<Index>(k)] = a[rows[k]];
  }
  return out;
}

}  // namespace

Matrix reduced_constraint_matrix(const SubproblemData& sub) {
  Matrix out = select_rows(sub.R, qp_space(sub));
  for (std::size_t k = 0; k < sub.qp_dual_rows.size(); ++k) {
    out.row(sub.n + static_cast<Index>(k)) /= sub.dual_scale[sub.qp_dual_rows[k]];
  }
  return out;
}

NormalStep normal_step(const Matrix& R, const Vector& r, double t_max,
                       double radius) {
  NormalStep out;
  out.dc = Vector::Zero(R.rows());

  const double r_norm = r.norm();
  if (r_norm == 0.0) {
    return out;  // d^c = 0 is required when the residual vanishes
  }

  const Vector Rr = R * r;
  const double Rr_sq = Rr.squaredNorm();
  const double Rr_norm = std::sqrt(Rr_sq);
  out.rr_ratio = Rr_norm / r_norm;
  if (Rr_norm <= 1e-14 * r_norm) {
    out.rank_deficient = true;
    return out;
  }

  const Vector w = R.transpose() * Rr;
  const double w_sq = w.squaredNorm();
  out.t = std::min(Rr_sq / w_sq, t_max);
  const Vector cauchy = -out.t * Rr;
  out.cauchy_norm = cauchy.norm();

  // Dogleg toward the minimal-norm least-squares point, which is what makes
  // a Newton pass after a parameter cut superlinear. The caller adapts the
  // radius from line-search feedback; fresh stages start Cauchy-scaled.
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(R.transpose());
  cod.setThreshold(1e-12);
  const Vector ls = cod.solve(-r);
  if (radius <= 0.0) radius = 2.0 * out.cauchy_norm;
  radius = std::min(std::max(radius, out.cauchy_norm), t_max * Rr_norm);
  out.radius = radius;
  if (!ls.allFinite()) {
    out.dc = cauchy;
  } else if (ls.norm() <= radius) {
    out.dc = ls;
    out.least_squares = true;
  } else {
    // ||d|| grows monotonically from the Cauchy point to the least-squares
    // point (both lie in range(R)); intersect with the radius.
    const Vector seg = ls - cauchy;
    const double a = seg.squaredNorm();
    const double b = 2.0 * cauchy.dot(seg);
    const double c = cauchy.squaredNorm() - radius * radius;
    const double disc = std::max(0.0, b * b - 4.0 * a * c);
    const double tau =
        a > 0.0 ? std::clamp((-b + std::sqrt(disc)) / (2.0 * a), 0.0, 1.0) : 0.0;
    out.dc = cauchy + tau * seg;
  }

  // ||r|| - ||r + s|| via the difference of squares; the direct form cancels
  // once the step is small.
  const Vector s = R.transpose() * out.dc;
  const double gain = -(2.0 * r.dot(s) + s.squaredNorm());
  out.decrease = gain / (r_norm + (r + s).norm());

  out.eta1_achieved = out.dc.norm() / Rr_norm;
  out.eta2_achieved = out.decrease * r_norm / Rr_sq;
  out.conditions_ok =
      out.eta1_achieved <= t_max * (1.0 + 1e-12) &&
      out.eta2_achieved >= 0.45 * out.t - 1e-15;
  return out;
}

StepResult solve_nullspace_qp(const SubproblemData& sub, const NormalStep& normal) {
  const Index n = sub.n;
  const Index m = sub.m;
  const Index mt = sub.mt;
  const double rho = sub.rho;

  const std::vector<Index> space = qp_space(sub);
  const Index nr = static_cast<Index>(space.size());
  const Matrix r_red = reduced_constraint_matrix(sub);
  Matrix q_red = select_both(sub.Q, space);
  Vector grad_red = select(sub.grad, space);
  for (Index k = n; k < nr; ++k) {
    const double scale = sub.dual_scale[space[static_cast<std::size_t>(k)] - n];
    q_red.row(k) /= scale;
    q_red.col(k) /= scale;
    grad_red[k] /= scale;
  }
  if (normal.dc.size() != nr) {
    throw QpFailure("null-space QP: normal step dimension mismatch");
  }
  const Vector& dc_red = normal.dc;

  StepResult out;

  const Matrix w = nullspace_basis(r_red);
  Vector d_red = dc_red;
  if (w.cols() > 0) {
    const Matrix reduced = w.transpose() * q_red * w;
    const Vector rhs = -w.transpose() * (grad_red + q_red * dc_red);

    SpdSolveResult solve;
    try {
      solve = spd_solve(reduced, rhs);
    } catch (const FactorizationFailure& e) {
      throw QpFailure(std::string("null-space QP: ") + e.what());
    }
    out.tau = solve.tau;
    d_red += w * solve.x;

    const Vector model_grad = grad_red + q_red * d_red;
    out.projected_gradient = (w.transpose() * model_grad).norm();
    const double check_scale = 1.0 + (grad_red + q_red * dc_red).norm();
    if (out.projected_gradient > 1e-8 * check_scale) {
      throw QpFailure("null-space QP: projected gradient " +
                      std::to_string(out.projected_gradient) +
                      " exceeds tolerance");
    }
  }

  out.dx = d_red.head(n);
  out.du = Vector::Zero(mt);
  for (std::size_t k = 0; k < sub.qp_dual_rows.size(); ++k) {
    const Index i = sub.qp_dual_rows[k];
    out.du[i] = d_red[n + static_cast<Index>(k)] / sub.dual_scale[i];
  }
  out.g = Vector::Zero(mt);

  // Inequality multipliers from the QP first-order conditions:
  // g_i = lambda_i (1 + (grad c_i^T dx + rho du_i) / (y_i + lambda_i)).
  // Frozen rows use du_i = 0, the value the step actually takes.
  for (Index i = 0; i < m; ++i) {
    const double stretch =
        (sub.jacobian.row(i).dot(out.dx) + rho * out.du[i]) / sub.ylam[i];
    out.g[i] = sub.lambda[i] * (1.0 + stretch);
  }

  // Equality multipliers by least squares on the x-stationarity block, then
  // the dual step from the first-order update lambda + J dx + rho du = g.
  const Index p = mt - m;
  if (p > 0) {
    Vector rhs = -(sub.grad.head(n) +
                   sub.Q.topLeftCorner(n, n + m) * [&] {
                     Vector dxm = Vector::Zero(n + m);
                     dxm.head(n) = out.dx;
                     dxm.tail(m) = out.du.head(m);
                     return dxm;
                   }());
    for (Index i = 0; i < m; ++i) {
      rhs -= sub.nu[i] * out.g[i] * sub.jacobian.row(i).transpose();
    }
    const Matrix eq_grads = sub.jacobian.bottomRows(p).transpose();  // n x p
    const Vector g_eq = eq_grads.colPivHouseholderQr().solve(rhs);
    for (Index j = 0; j < p; ++j) {
      out.g[m + j] = g_eq[j];
      out.du[m + j] = (g_eq[j] - sub.lambda[m + j] -
                       sub.jacobian.row(m + j).dot(out.dx)) /
                      rho;
    }
  }

  Vector d_full(n + mt);
  d_full.head(n) = out.dx;
  d_full.tail(mt) = out.du;

  out.dc = Vector::Zero(n + mt);
  for (Index k = 0; k < nr; ++k) {
    const Index row = space[static_cast<std::size_t>(k)];
    out.dc[row] = row < n ? dc_red[k] : dc_red[k] / sub.dual_scale[row - n];
  }

  // ||r|| - ||r + s|| through the difference of squares; the direct form
  // cancels once the residual is small.
  const Vector r_shift = sub.R.transpose() * d_full;
  const double r_norm = sub.r.norm();
  const double shifted_norm = (sub.r + r_shift).norm();
  const double denom = r_norm + shifted_norm;
  out.pred_decrease =
      denom > 0.0 ? -(2.0 * sub.r.dot(r_shift) + r_shift.squaredNorm()) / denom : 0.0;
  out.grad_lin = sub.grad.dot(d_full);
  out.dQd = d_full.dot(sub.Q * d_full);
  out.qhat = out.grad_lin + 0.5 * out.dQd;
  return out;
}

}  // namespace pdip
