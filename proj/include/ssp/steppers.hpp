#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "ssp/analysis.hpp"
#include "ssp/errors.hpp"
#include "ssp/functionals.hpp"
#include "ssp/linalg.hpp"
#include "ssp/newton.hpp"
#include "ssp/problem.hpp"
#include "ssp/tableau.hpp"

namespace ssp {

enum class StepMode { standard, fallback_ieie, partitioned };

inline const char* to_string(StepMode m) {
  switch (m) {
    case StepMode::standard: return "standard";
    case StepMode::fallback_ieie: return "fallback_IEIE";
    case StepMode::partitioned: return "partitioned";
  }
  return "?";
}

struct StepOutcome {
  Vector u_next;
  StepStats stats;
  StepMode mode = StepMode::standard;
  /// Componentwise selector of a partitioned step (empty otherwise).
  Eigen::ArrayXd sigma;
};

// ---------------------------------------------------------------------------------------------
// Componentwise DIRK engine

/// DIRK coefficients that may differ per solution component: a(i,j)[k] multiplies f_k(g^j) in
/// stage i. A plain tableau uses constant arrays.
struct ComponentTableau {
  int s = 0;
  std::vector<Eigen::ArrayXd> a;  // row-major s x s
  std::vector<Eigen::ArrayXd> b;
  Vector c;

  const Eigen::ArrayXd& A(int i, int j) const { return a[static_cast<size_t>(i * s + j)]; }

  static ComponentTableau uniform(const ButcherTableau& tab, Eigen::Index m) {
    if (!tab.lower_triangular())
      throw DomainError("tableau '" + tab.label + "' is not (diagonally) implicit lower triangular");
    ComponentTableau ct;
    ct.s = tab.stages();
    for (int i = 0; i < ct.s; ++i)
      for (int j = 0; j < ct.s; ++j) ct.a.push_back(Eigen::ArrayXd::Constant(m, tab.A(i, j)));
    for (int j = 0; j < ct.s; ++j) ct.b.push_back(Eigen::ArrayXd::Constant(m, tab.b(j)));
    ct.c = tab.c;
    return ct;
  }

  /// a_ij sigma + a~_ij (1 - sigma), likewise for b. Both tableaux share s and c.
  static ComponentTableau partitioned(const ButcherTableau& hi, const ButcherTableau& lo,
                                      const Eigen::ArrayXd& sigma) {
    if (hi.stages() != lo.stages() || (hi.c - lo.c).cwiseAbs().maxCoeff() > 1e-14)
      throw DomainError("partitioned tableaux must share stages and abscissae");
    if (!hi.lower_triangular() || !lo.lower_triangular())
      throw DomainError("partitioned tableaux must be lower triangular");
    const Eigen::ArrayXd rest = 1.0 - sigma;
    ComponentTableau ct;
    ct.s = hi.stages();
    for (int i = 0; i < ct.s; ++i)
      for (int j = 0; j < ct.s; ++j) ct.a.push_back(hi.A(i, j) * sigma + lo.A(i, j) * rest);
    for (int j = 0; j < ct.s; ++j) ct.b.push_back(hi.b(j) * sigma + lo.b(j) * rest);
    ct.c = hi.c;
    return ct;
  }
};

/// Lower limit of the adaptive finite-difference perturbation in stage solves.
inline constexpr double kMinFdEpsilon = 1e-12;

namespace detail {

inline bool all_zero(const Eigen::ArrayXd& x) { return x.size() == 0 || x.abs().maxCoeff() == 0.0; }

/// Solves g - base - h diag(d) f(t, g) = 0 from the guess; returns (g, f(t,g)).
inline std::pair<Vector, Vector> implicit_stage(const IvpProblem& prob, double t, const Vector& base,
                                                const Eigen::ArrayXd& d, double h,
                                                const Vector& guess, const NewtonConfig& cfg,
                                                StepStats& stats, int stage) {
  Vector last_f;
  double last_norm = 0.0;
  auto residual = [&](const Vector& g) {
    last_f = prob.rhs(t, g);
    ++stats.rhs_evals;
    Vector r = g - base - h * (d * last_f.array()).matrix();
    last_norm = sup_norm(r);
    return r;
  };
  // Finite-difference Jacobians of limited fluxes are poor when neighbouring differences are far
  // below the perturbation; shrink it whenever an iteration fails to halve the residual.
  NewtonConfig jcfg = cfg;
  double prev_norm = std::numeric_limits<double>::infinity();
  auto jac = [&](const Vector& g) {
    if (last_norm > 0.5 * prev_norm) jcfg.fd_epsilon = std::max(jcfg.fd_epsilon * 0.1, kMinFdEpsilon);
    prev_norm = last_norm;
    Matrix J = problem_jacobian(prob, t, g, jcfg, &stats, &last_f);
    Matrix M = -h * (d.matrix().asDiagonal() * J);
    M.diagonal().array() += 1.0;
    return M;
  };
  try {
    Vector g = newton_solve(residual, jac, guess, cfg, &stats);
    return {std::move(g), std::move(last_f)};
  } catch (const NoConvergence& e) {
    throw NoConvergence(std::string(e.what()) + " in stage " + std::to_string(stage + 1), stage);
  }
}

}  // namespace detail

/// Runs the stages of a (componentwise) DIRK method and returns u + h sum_i b_i f(g^i).
inline StepOutcome dirk_engine(const ComponentTableau& ct, const IvpProblem& prob, double t,
                               const Vector& u, double h, const NewtonConfig& cfg) {
  if (!(h > 0.0)) throw DomainError("step size must be positive");
  StepOutcome out;
  std::vector<Vector> F(static_cast<size_t>(ct.s));
  std::vector<bool> used(static_cast<size_t>(ct.s), false);
  for (int j = 0; j < ct.s; ++j) {
    bool u_j = !detail::all_zero(ct.b[static_cast<size_t>(j)]);
    for (int i = j + 1; i < ct.s && !u_j; ++i) u_j = !detail::all_zero(ct.A(i, j));
    used[static_cast<size_t>(j)] = u_j;
  }
  for (int i = 0; i < ct.s; ++i) {
    if (!used[static_cast<size_t>(i)]) continue;
    Vector base = u;
    for (int j = 0; j < i; ++j)
      if (used[static_cast<size_t>(j)]) base.array() += h * ct.A(i, j) * F[static_cast<size_t>(j)].array();
    const double ti = t + ct.c(i) * h;
    if (detail::all_zero(ct.A(i, i))) {
      F[static_cast<size_t>(i)] = prob.rhs(ti, base);
      ++out.stats.rhs_evals;
    } else {
      auto [g, fg] = detail::implicit_stage(prob, ti, base, ct.A(i, i), h, u, cfg, out.stats, i);
      F[static_cast<size_t>(i)] = std::move(fg);
    }
  }
  out.u_next = u;
  for (int i = 0; i < ct.s; ++i)
    if (used[static_cast<size_t>(i)])
      out.u_next.array() += h * ct.b[static_cast<size_t>(i)] * F[static_cast<size_t>(i)].array();
  return out;
}

inline StepOutcome dirk_step(const ButcherTableau& tab, const IvpProblem& prob, double t,
                             const Vector& u, double h, const NewtonConfig& cfg = {}) {
  return dirk_engine(ComponentTableau::uniform(tab, u.size()), prob, t, u, h, cfg);
}

// ---------------------------------------------------------------------------------------------
// TR-BDF2 operating modes

/// Hybrid TR-BDF2 in its two-substep form: a trapezoid-like substep over gamma h, then a
/// BDF2-like substep. Each substep value is rebuilt explicitly from the converged slopes.
inline StepOutcome trbdf2_two_stage_step(const IvpProblem& prob, double t, const Vector& u, double h,
                                         double alpha, double gamma = kTrbdf2Gamma,
                                         const NewtonConfig& cfg = {}) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("TR-BDF2: alpha outside [0,1]");
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("TR-BDF2: gamma outside (0,1)");
  if (!(h > 0.0)) throw DomainError("step size must be positive");
  StepOutcome out;
  const double den = alpha * (1.0 - gamma) + 1.0;
  const double w = (alpha * (1.0 - gamma) + gamma) / den;
  const double a33 = (1.0 - gamma) / den;
  const auto m = u.size();

  Vector F1 = Vector::Zero(m);
  if (alpha > 0.0) {
    F1 = prob.rhs(t, u);
    ++out.stats.rhs_evals;
  }
  const Vector base1 = u + gamma * h * (alpha / 2.0) * F1;
  auto [g2, F2] = detail::implicit_stage(prob, t + gamma * h, base1,
                                         Eigen::ArrayXd::Constant(m, gamma * (1.0 - alpha / 2.0)),
                                         h, u, cfg, out.stats, 1);
  const Vector ustar = u + gamma * h * ((alpha / 2.0) * F1 + (1.0 - alpha / 2.0) * F2);
  const Vector base2 = (1.0 - w / gamma) * u + (w / gamma) * ustar;
  auto [g3, F3] = detail::implicit_stage(prob, t + h, base2, Eigen::ArrayXd::Constant(m, a33), h, u,
                                         cfg, out.stats, 2);
  out.u_next = base2 + a33 * h * F3;
  return out;
}

/// Step-level fallback: TR-BDF2 (alpha = 1), redone from u as IE-IE (alpha = 0) when the
/// global sensor rejects the tentative state.
inline StepOutcome trbdf2_blended_step(const IvpProblem& prob, double t, const Vector& u, double h,
                                       const SensorSpec& sensor, const NewtonConfig& cfg = {}) {
  if (sensor.scope != SensorScope::global) throw DomainError("blended TR-BDF2 needs a global sensor");
  StepOutcome first = trbdf2_two_stage_step(prob, t, u, h, 1.0, kTrbdf2Gamma, cfg);
  if (global_sensor(sensor, first.u_next) == 1) return first;
  StepOutcome second = trbdf2_two_stage_step(prob, t, u, h, 0.0, kTrbdf2Gamma, cfg);
  second.stats += first.stats;
  ++second.stats.sensor_trips;
  ++second.stats.fallback_steps;
  second.mode = StepMode::fallback_ieie;
  return second;
}

/// Componentwise partitioned TR-BDF2: an explicit Euler probe over h/R selects, per component,
/// TR-BDF2 (sigma = 1) or IE-IE (sigma = 0) coefficients.
inline StepOutcome trbdf2_partitioned_step(const IvpProblem& prob, double t, const Vector& u, double h,
                                           const SensorSpec& sensor, const MonotonicityRadius& R,
                                           const NewtonConfig& cfg = {}) {
  if (sensor.scope != SensorScope::local) throw DomainError("partitioned TR-BDF2 needs a local sensor");
  if (R.is_infinite()) throw InfiniteRadius("partitioned TR-BDF2: probe step h/R needs a finite R");
  const double r = R.value();
  if (!(r > 0.0)) throw DomainError("partitioned TR-BDF2: R must be positive");
  const Vector probe = u + (h / r) * prob.rhs(t, u);
  Eigen::ArrayXd sigma = local_sensor(sensor, probe);
  static const ButcherTableau hi = trbdf2_tableau();
  static const ButcherTableau lo = ieie_tableau();
  StepOutcome out = dirk_engine(ComponentTableau::partitioned(hi, lo, sigma), prob, t, u, h, cfg);
  ++out.stats.rhs_evals;
  if (sigma.minCoeff() < 1.0) ++out.stats.sensor_trips;
  out.mode = StepMode::partitioned;
  out.sigma = std::move(sigma);
  return out;
}

// ---------------------------------------------------------------------------------------------
// Competitors

/// Linearly implicit step (autonomous form):
/// (I - gamma h J) k_i = f(u + h sum_j alpha_ij k_j) + h J sum_j gamma_ij k_j, u+ = u + h sum b_i k_i.
inline StepOutcome rosenbrock_step(const RosenbrockTableau& tab, const IvpProblem& prob, double t,
                                   const Vector& u, double h, const NewtonConfig& cfg = {}) {
  if (!(h > 0.0)) throw DomainError("step size must be positive");
  StepOutcome out;
  const int s = tab.stages();
  const Vector f0 = prob.rhs(t, u);
  ++out.stats.rhs_evals;
  const Matrix J = problem_jacobian(prob, t, u, cfg, &out.stats, &f0);
  ++out.stats.jac_evals;
  Matrix M = -tab.gamma_diag * h * J;
  M.diagonal().array() += 1.0;
  const auto lu = factorize(M, "rosenbrock");
  std::vector<Vector> k(static_cast<size_t>(s));
  for (int i = 0; i < s; ++i) {
    Vector arg = u;
    Vector lin = Vector::Zero(u.size());
    double ci = 0.0;
    for (int j = 0; j < i; ++j) {
      arg += h * tab.alpha(i, j) * k[static_cast<size_t>(j)];
      lin += tab.gamma_mat(i, j) * k[static_cast<size_t>(j)];
      ci += tab.alpha(i, j);
    }
    Vector rhs;
    if (i == 0) {
      rhs = f0;
    } else {
      rhs = prob.rhs(t + ci * h, arg);
      ++out.stats.rhs_evals;
    }
    if (i > 0) rhs += h * (J * lin);
    k[static_cast<size_t>(i)] = lu.solve(rhs);
    ++out.stats.linear_solves;
  }
  out.u_next = u;
  for (int i = 0; i < s; ++i) out.u_next += h * tab.b(i) * k[static_cast<size_t>(i)];
  return out;
}

inline StepOutcome ros2_step(const IvpProblem& prob, double t, const Vector& u, double h,
                             const NewtonConfig& cfg = {}) {
  static const RosenbrockTableau tab = ros2_tableau();
  return rosenbrock_step(tab, prob, t, u, h, cfg);
}

namespace detail {

/// Solves x_i = u_i + h sum_j [P_ij x_j / w_j - D_ij x_i / w_i] with P = production, D = P^T.
inline Vector patankar_solve(const Matrix& P, const Vector& w, const Vector& u, double h,
                             const Eigen::Array<bool, Eigen::Dynamic, 1>& reactant) {
  const auto m = u.size();
  Matrix M = Matrix::Identity(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    if (!reactant(j)) continue;  // column j of P vanishes for species that are never consumed
    double loss = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (i == j) continue;
      M(i, j) -= h * P(i, j) / w(j);
      loss += P(i, j);
    }
    M(j, j) += h * loss / w(j);
  }
  Eigen::PartialPivLU<Matrix> lu(M);
  if (!(lu.rcond() > kTolRcond)) throw SingularSystem("mprk2: Patankar system is singular");
  return lu.solve(u);
}

}  // namespace detail

/// Second-order modified Patankar Runge-Kutta scheme (MPRK22, Heun based).
inline StepOutcome mprk2_step(const ProductionDestructionSystem& pd, const Vector& u, double h) {
  if (!(h > 0.0)) throw DomainError("step size must be positive");
  const auto m = pd.species();
  Eigen::Array<bool, Eigen::Dynamic, 1> reactant(m);
  for (Eigen::Index q = 0; q < m; ++q) reactant(q) = pd.is_reactant(q);
  StepOutcome out;
  const PdSplit s0 = pd_split(pd, u);
  const Vector u1 = detail::patankar_solve(s0.production, u, u, h, reactant);
  const PdSplit s1 = pd_split(pd, u1);
  const Matrix Pavg = 0.5 * (s0.production + s1.production);
  out.u_next = detail::patankar_solve(Pavg, u1, u, h, reactant);
  out.stats.rhs_evals = 2;
  out.stats.linear_solves = 2;
  return out;
}

inline StepOutcome explicit_euler_step(const IvpProblem& prob, double t, const Vector& u, double h) {
  StepOutcome out;
  out.u_next = u + h * prob.rhs(t, u);
  out.stats.rhs_evals = 1;
  return out;
}

/// Sets negative components to zero; returns the clipped state and the mass added.
inline std::pair<Vector, double> clip_nonnegative(const Vector& u) {
  Vector v = u;
  double added = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v(i) < 0.0) {
      added += -v(i);
      v(i) = 0.0;
    }
  return {std::move(v), added};
}

}  // namespace ssp
