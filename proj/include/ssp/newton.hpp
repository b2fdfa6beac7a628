#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "ssp/errors.hpp"
#include "ssp/linalg.hpp"
#include "ssp/problem.hpp"

namespace ssp {

enum class JacobianMode { analytic, finite_difference };

struct NewtonConfig {
  double tol = 1e-10;
  int max_iters = 50;
  JacobianMode jacobian_mode = JacobianMode::analytic;
  double fd_epsilon = 1e-7;
  bool jacobian_reuse = false;
  int max_halvings = 10;

  void validate() const {
    if (!(tol > 0.0)) throw ConfigError("newton: tol must be positive");
    if (max_iters < 1) throw ConfigError("newton: max_iters must be >= 1");
    if (!(fd_epsilon > 0.0)) throw ConfigError("newton: fd_epsilon must be positive");
    if (max_halvings < 0) throw ConfigError("newton: max_halvings must be >= 0");
  }
};

/// Work counters. Finite-difference Jacobian columns count as right-hand side evaluations.
struct StepStats {
  long rhs_evals = 0;
  long jac_evals = 0;
  long newton_iters = 0;
  long linear_solves = 0;
  long sensor_trips = 0;
  long fallback_steps = 0;
  double clipped_mass = 0.0;
  /// States flagged by the problem's state check (e.g. negative wave speed for limited fluxes).
  long state_violations = 0;

  StepStats& operator+=(const StepStats& o) {
    rhs_evals += o.rhs_evals;
    jac_evals += o.jac_evals;
    newton_iters += o.newton_iters;
    linear_solves += o.linear_solves;
    sensor_trips += o.sensor_trips;
    fallback_steps += o.fallback_steps;
    clipped_mass += o.clipped_mass;
    state_violations += o.state_violations;
    return *this;
  }
};

using ResidualFn = std::function<Vector(const Vector&)>;
using MatrixFn = std::function<Matrix(const Vector&)>;

/// Reciprocal condition estimates below this are treated as singular.
inline constexpr double kTolRcond = 1e-14;

inline Eigen::PartialPivLU<Matrix> factorize(const Matrix& M, const char* what) {
  if (!M.allFinite()) throw SingularJacobian(std::string(what) + ": non-finite matrix");
  Eigen::PartialPivLU<Matrix> lu(M);
  const double rc = lu.rcond();
  if (!(rc > kTolRcond)) throw SingularJacobian(std::string(what) + ": matrix is numerically singular");
  return lu;
}

/// Damped Newton iteration; returns x with sup|residual(x)| <= cfg.tol.
/// The last residual evaluation always corresponds to the returned point.
inline Vector newton_solve(const ResidualFn& residual, const MatrixFn& jac, const Vector& guess,
                           const NewtonConfig& cfg, StepStats* stats = nullptr) {
  Vector x = guess;
  Vector r = residual(x);
  if (r.size() != x.size()) throw DimensionMismatch("newton: residual and guess differ in size");
  double nr = sup_norm(r);
  if (!std::isfinite(nr)) throw NoConvergence("newton: non-finite residual at the initial guess");
  Eigen::PartialPivLU<Matrix> lu;
  for (int it = 0; it < cfg.max_iters; ++it) {
    if (nr <= cfg.tol) return x;
    if (it == 0 || !cfg.jacobian_reuse) {
      lu = factorize(jac(x), "newton");
      if (stats) ++stats->jac_evals;
    }
    const Vector dx = lu.solve(-r);
    if (stats) {
      ++stats->linear_solves;
      ++stats->newton_iters;
    }
    double lambda = 1.0;
    Vector xn, rn;
    double nrn = 0.0;
    for (int k = 0;; ++k) {
      xn = x + lambda * dx;
      rn = residual(xn);
      nrn = sup_norm(rn);
      if (nrn < nr || k >= cfg.max_halvings) break;
      lambda *= 0.5;
    }
    if (!std::isfinite(nrn)) throw NoConvergence("newton: residual became non-finite");
    x = std::move(xn);
    r = std::move(rn);
    nr = nrn;
  }
  if (nr <= cfg.tol) return x;
  throw NoConvergence("newton: no convergence in " + std::to_string(cfg.max_iters) +
                      " iterations (residual " + std::to_string(nr) + ")");
}

/// One-sided finite-difference Jacobian, column j perturbed by fd_epsilon * max(1, |u_j|).
inline Matrix fd_jacobian(const RhsFn& f, double t, const Vector& u, const Vector& fu, double eps,
                          StepStats* stats = nullptr) {
  const auto m = u.size();
  Matrix J(m, m);
  Vector up = u;
  for (Eigen::Index j = 0; j < m; ++j) {
    const double dj = eps * std::max(1.0, std::abs(u(j)));
    up(j) = u(j) + dj;
    const double step = up(j) - u(j);
    J.col(j) = (f(t, up) - fu) / step;
    up(j) = u(j);
  }
  if (stats) stats->rhs_evals += m;
  return J;
}

/// df/du at (t,u): analytic when requested and available, otherwise finite differences.
/// fu is f(t,u) if the caller already has it (saves one evaluation).
inline Matrix problem_jacobian(const IvpProblem& prob, double t, const Vector& u,
                               const NewtonConfig& cfg, StepStats* stats = nullptr,
                               const Vector* fu = nullptr) {
  if (cfg.jacobian_mode == JacobianMode::analytic && prob.has_jacobian()) return prob.jacobian(t, u);
  if (fu) return fd_jacobian(prob.rhs, t, u, *fu, cfg.fd_epsilon, stats);
  const Vector f0 = prob.rhs(t, u);
  if (stats) ++stats->rhs_evals;
  return fd_jacobian(prob.rhs, t, u, f0, cfg.fd_epsilon, stats);
}

}  // namespace ssp
