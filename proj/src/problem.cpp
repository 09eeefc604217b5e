#include "pdip/problem.hpp"

#include <cmath>
#include <stdexcept>

namespace pdip {

namespace {

bool all_finite(const Vector& v) { return v.allFinite(); }

Vector central_difference(const std::function<double(const Vector&)>& fn,
                          const Vector& x) {
  Vector g(x.size());
  Vector xp = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    const double xi = x[i];
    xp[i] = xi + h;
    const double fp = fn(xp);
    xp[i] = xi - h;
    const double fm = fn(xp);
    xp[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace

Index Problem::num_inequalities() const {
  Index m = 0;
  for (const auto& c : constraints) {
    if (c.kind == ConstraintKind::Inequality) ++m;
  }
  return m;
}

Index Problem::num_equalities() const {
  return num_constraints() - num_inequalities();
}

void validate(const Problem& problem) {
  if (problem.n < 1) throw std::invalid_argument(problem.name + ": n must be >= 1");
  if (problem.constraints.empty()) {
    throw std::invalid_argument(problem.name + ": at least one constraint required");
  }
  if (!problem.objective) throw std::invalid_argument(problem.name + ": missing objective");
  bool seen_equality = false;
  for (const auto& c : problem.constraints) {
    if (!c.value) throw std::invalid_argument(problem.name + ": constraint without value");
    if (c.kind == ConstraintKind::Equality) {
      seen_equality = true;
    } else if (seen_equality) {
      throw std::invalid_argument(problem.name + ": inequalities must precede equalities");
    }
  }
  if (problem.start.size() != problem.n) {
    throw std::invalid_argument(problem.name + ": start point has wrong dimension");
  }
}

Evaluation eval(const Problem& problem, const Vector& x) {
  Evaluation out;
  out.f = problem.objective(x);
  if (!std::isfinite(out.f)) {
    throw EvalFailure(problem.name + ": objective is not finite", -1);
  }
  out.c.resize(problem.num_constraints());
  for (Index i = 0; i < out.c.size(); ++i) {
    out.c[i] = problem.constraints[static_cast<std::size_t>(i)].value(x);
    if (!std::isfinite(out.c[i])) {
      throw EvalFailure(problem.name + ": constraint " + std::to_string(i) +
                            " is not finite",
                        i);
    }
  }
  return out;
}

GradientEvaluation eval_gradients(const Problem& problem, const Vector& x) {
  GradientEvaluation out;
  if (problem.objective_gradient) {
    out.grad_f = problem.objective_gradient(x);
  } else {
    out.grad_f = central_difference(problem.objective, x);
  }
  if (!all_finite(out.grad_f)) {
    throw EvalFailure(problem.name + ": objective gradient is not finite", -1);
  }
  out.jacobian.resize(problem.num_constraints(), problem.n);
  for (Index i = 0; i < problem.num_constraints(); ++i) {
    const auto& con = problem.constraints[static_cast<std::size_t>(i)];
    const Vector gi = con.gradient ? con.gradient(x) : central_difference(con.value, x);
    if (!all_finite(gi)) {
      throw EvalFailure(problem.name + ": gradient of constraint " +
                            std::to_string(i) + " is not finite",
                        i);
    }
    out.jacobian.row(i) = gi.transpose();
  }
  return out;
}

GradientCheckReport check_gradients(const Problem& problem, const Vector& x) {
  GradientCheckReport report;
  report.constraint_deviations = Vector::Zero(problem.num_constraints());

  auto relative_deviation = [](const Vector& analytic, const Vector& numeric,
                               Index* coord) {
    double worst = 0.0;
    *coord = -1;
    for (Index i = 0; i < analytic.size(); ++i) {
      const double scale = std::max({1.0, std::abs(analytic[i]), std::abs(numeric[i])});
      const double dev = std::abs(analytic[i] - numeric[i]) / scale;
      if (dev > worst) {
        worst = dev;
        *coord = i;
      }
    }
    return worst;
  };

  Index coord = -1;
  if (problem.objective_gradient) {
    report.objective_deviation = relative_deviation(
        problem.objective_gradient(x), central_difference(problem.objective, x), &coord);
    report.worst = report.objective_deviation;
    report.worst_constraint = -1;
    report.worst_coordinate = coord;
  }
  for (Index i = 0; i < problem.num_constraints(); ++i) {
    const auto& con = problem.constraints[static_cast<std::size_t>(i)];
    if (!con.gradient) continue;
    const double dev = relative_deviation(con.gradient(x),
                                          central_difference(con.value, x), &coord);
    report.constraint_deviations[i] = dev;
    if (dev > report.worst) {
      report.worst = dev;
      report.worst_constraint = i;
      report.worst_coordinate = coord;
    }
  }
  return report;
}

Vector violation(const Problem& problem, const Vector& c) {
  Vector v(c.size());
  for (Index i = 0; i < c.size(); ++i) {
    const bool eq = problem.constraints[static_cast<std::size_t>(i)].kind ==
                    ConstraintKind::Equality;
    v[i] = eq ? c[i] : std::max(0.0, c[i]);
  }
  return v;
}

namespace {

Constraint ineq(std::function<double(const Vector&)> value,
                std::function<Vector(const Vector&)> gradient) {
  return Constraint{ConstraintKind::Inequality, std::move(value), std::move(gradient)};
}

Constraint equality(std::function<double(const Vector&)> value,
                    std::function<Vector(const Vector&)> gradient) {
  return Constraint{ConstraintKind::Equality, std::move(value), std::move(gradient)};
}

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

Vector vec3(double a, double b, double c) {
  Vector v(3);
  v << a, b, c;
  return v;
}

// "isolated": every constraint is violated at the infeasibility minimizer (0,0).
Problem make_tp1() {
  Problem p;
  p.name = "tp1";
  p.n = 2;
  p.objective = [](const Vector& x) { return x[0] + x[1]; };
  p.objective_gradient = [](const Vector&) { return vec2(1.0, 1.0); };
  p.constraints = {
      ineq([](const Vector& x) { return x[0] * x[0] - x[1] + 1.0; },
           [](const Vector& x) { return vec2(2.0 * x[0], -1.0); }),
      ineq([](const Vector& x) { return x[0] * x[0] + x[1] + 1.0; },
           [](const Vector& x) { return vec2(2.0 * x[0], 1.0); }),
      ineq([](const Vector& x) { return -x[0] + x[1] * x[1] + 1.0; },
           [](const Vector& x) { return vec2(-1.0, 2.0 * x[1]); }),
      ineq([](const Vector& x) { return x[0] + x[1] * x[1] + 1.0; },
           [](const Vector& x) { return vec2(1.0, 2.0 * x[1]); }),
  };
  p.start = vec2(3.0, 2.0);
  return p;
}

// "nactive": infeasible with a stationary point of the violation measure at
// (-0.2, 0) where only two of the three constraints are violated.
Problem make_tp2() {
  Problem p;
  p.name = "tp2";
  p.n = 2;
  p.objective = [](const Vector& x) { return x[0]; };
  p.objective_gradient = [](const Vector&) { return vec2(1.0, 0.0); };
  p.constraints = {
      ineq([](const Vector& x) { return 0.5 * (x[0] + x[1] * x[1] + 1.0); },
           [](const Vector& x) { return vec2(0.5, x[1]); }),
      ineq([](const Vector& x) { return -x[0] + x[1] * x[1]; },
           [](const Vector& x) { return vec2(-1.0, 2.0 * x[1]); }),
      ineq([](const Vector& x) { return x[0] - x[1] * x[1]; },
           [](const Vector& x) { return vec2(1.0, -2.0 * x[1]); }),
  };
  p.start = vec2(-20.0, 10.0);
  return p;
}

// Wachter-Biegler counterexample; unique global minimizer (2, 3, 0).
// Bounds x2 >= 0, x3 >= 0 are normalized to -x2 <= 0, -x3 <= 0.
Problem make_tp3() {
  Problem p;
  p.name = "tp3";
  p.n = 3;
  p.objective = [](const Vector& x) { return x[0]; };
  p.objective_gradient = [](const Vector&) { return vec3(1.0, 0.0, 0.0); };
  p.constraints = {
      ineq([](const Vector& x) { return -x[1]; },
           [](const Vector&) { return vec3(0.0, -1.0, 0.0); }),
      ineq([](const Vector& x) { return -x[2]; },
           [](const Vector&) { return vec3(0.0, 0.0, -1.0); }),
      equality([](const Vector& x) { return x[0] * x[0] - x[1] - 1.0; },
               [](const Vector& x) { return vec3(2.0 * x[0], -1.0, 0.0); }),
      equality([](const Vector& x) { return x[0] - x[2] - 2.0; },
               [](const Vector&) { return vec3(1.0, 0.0, -1.0); }),
  };
  p.start = vec3(-4.0, 1.0, 1.0);
  return p;
}

// Hock-Schittkowski 13: the optimum (1, 0) is a singular stationary point
// (active gradients linearly dependent, MFCQ fails). The constraint
// (1-x1)^3 - x2 >= 0 is normalized to -(1-x1)^3 + x2 <= 0.
Problem make_tp4() {
  Problem p;
  p.name = "tp4";
  p.n = 2;
  p.objective = [](const Vector& x) {
    return (x[0] - 2.0) * (x[0] - 2.0) + x[1] * x[1];
  };
  p.objective_gradient = [](const Vector& x) {
    return vec2(2.0 * (x[0] - 2.0), 2.0 * x[1]);
  };
  p.constraints = {
      ineq([](const Vector& x) {
             const double t = 1.0 - x[0];
             return -t * t * t + x[1];
           },
           [](const Vector& x) {
             const double t = 1.0 - x[0];
             return vec2(3.0 * t * t, 1.0);
           }),
      ineq([](const Vector& x) { return -x[0]; },
           [](const Vector&) { return vec2(-1.0, 0.0); }),
      ineq([](const Vector& x) { return -x[1]; },
           [](const Vector&) { return vec2(0.0, -1.0); }),
  };
  p.start = vec2(-2.0, -2.0);
  return p;
}

}  // namespace

const ProblemRegistry& ProblemRegistry::builtin() {
  static const ProblemRegistry registry = [] {
    ProblemRegistry r;
    r.makers_ = {
        {"tp1", &make_tp1},
        {"tp2", &make_tp2},
        {"tp3", &make_tp3},
        {"tp4", &make_tp4},
    };
    return r;
  }();
  return registry;
}

bool ProblemRegistry::contains(const std::string& id) const {
  return makers_.count(id) != 0;
}

Problem ProblemRegistry::make(const std::string& id) const {
  return makers_.at(id)();
}

std::vector<std::string> ProblemRegistry::ids() const {
  std::vector<std::string> out;
  out.reserve(makers_.size());
  for (const auto& [id, fn] : makers_) out.push_back(id);
  return out;
}

}  // namespace pdip
