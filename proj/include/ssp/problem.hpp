#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ssp/errors.hpp"
#include "ssp/linalg.hpp"

namespace ssp {

/// Patankar denominators at or below this value are rejected.
inline constexpr double kFloorEps = 1e-30;

/// Mass-action network: reactions sum_q L(q,p) u_q -> sum_q R(q,p) u_q with rate constant k_p.
/// Matrices are species x reactions.
struct ProductionDestructionSystem {
  Matrix L;
  Matrix R;
  Vector k;

  Eigen::Index species() const { return L.rows(); }
  Eigen::Index reactions() const { return L.cols(); }
  Matrix Q() const { return R - L; }

  void validate() const {
    if (R.rows() != L.rows() || R.cols() != L.cols() || k.size() != L.cols())
      throw DimensionMismatch("production-destruction system: inconsistent shapes");
    if (L.minCoeff() < 0.0 || R.minCoeff() < 0.0 || k.minCoeff() < 0.0)
      throw DomainError("production-destruction system: negative coefficient");
  }

  /// omega_p = k_p prod_q u_q^{L(q,p)}.
  Vector rates(const Vector& u) const {
    Vector w(reactions());
    for (Eigen::Index p = 0; p < reactions(); ++p) {
      double r = k(p);
      for (Eigen::Index q = 0; q < species(); ++q) {
        const double e = L(q, p);
        if (e == 0.0) continue;
        r *= e == 1.0 ? u(q) : e == 2.0 ? u(q) * u(q) : std::pow(u(q), e);
      }
      w(p) = r;
    }
    return w;
  }

  Vector rhs(const Vector& u) const { return Q() * rates(u); }

  /// True if species q is consumed by some reaction.
  bool is_reactant(Eigen::Index q) const { return L.row(q).maxCoeff() > 0.0; }
};

/// Production/destruction view of a mass-action network at a state u.
struct PdSplit {
  /// production(i, j): rate at which species j turns into species i (pairwise, >= 0).
  Matrix production;
  /// destruction(i, j) = production(j, i).
  Matrix destruction;
  /// Gross production R omega(u).
  Vector gross_production;
  /// Diagonal destruction coefficients (L(i,.) omega(u)) / u_i; 0 for species never consumed.
  Vector destruction_rate;
};

/// Orthonormal basis of Ker(Q^T), returned as rows (n x N_s).
inline Matrix linear_invariants(const Matrix& Q) {
  Eigen::FullPivLU<Matrix> lu(Q.transpose());
  lu.setThreshold(1e-12);
  const Matrix kernel = lu.kernel();
  if (kernel.cols() == 0 || (kernel.cols() == 1 && kernel.norm() == 0.0)) return Matrix(0, Q.rows());
  Eigen::HouseholderQR<Matrix> qr(kernel);
  Matrix basis = qr.householderQ() * Matrix::Identity(kernel.rows(), kernel.cols());
  // Fix signs so the largest entry of each basis vector is positive.
  for (Eigen::Index c = 0; c < basis.cols(); ++c) {
    Eigen::Index idx;
    basis.col(c).cwiseAbs().maxCoeff(&idx);
    if (basis(idx, c) < 0.0) basis.col(c) *= -1.0;
  }
  basis = basis.unaryExpr([](double x) { return std::abs(x) < 1e-14 ? 0.0 : x; });
  return basis.transpose();
}

/// Per-reaction flow pattern: F_p(i, j) is the amount of species j turned into species i per unit
/// rate of reaction p. Reactant/product pairs with identical invariant weights are matched first,
/// so every flow that can respect the linear invariants does; the rest is spread proportionally.
inline std::vector<Matrix> reaction_flows(const ProductionDestructionSystem& pd) {
  const auto m = pd.species();
  const Matrix Q = pd.Q();
  const Matrix W = linear_invariants(Q);
  std::vector<Matrix> flows;
  for (Eigen::Index p = 0; p < pd.reactions(); ++p) {
    Vector take = Q.col(p).cwiseMax(0.0);
    Vector give = (-Q.col(p)).cwiseMax(0.0);
    const double gain = take.sum();
    if (std::abs(gain - give.sum()) > 1e-12 * std::max(1.0, gain))
      throw DomainError("pd_split: reaction " + std::to_string(p) + " does not conserve sum(u)");
    Matrix F = Matrix::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j) {
        if (take(i) <= 0.0 || give(j) <= 0.0) continue;
        if (W.rows() > 0 && (W.col(i) - W.col(j)).cwiseAbs().maxCoeff() > 1e-12) continue;
        const double x = std::min(take(i), give(j));
        F(i, j) += x;
        take(i) -= x;
        give(j) -= x;
      }
    const double rest = take.sum();
    if (rest > 1e-14 * std::max(1.0, gain)) F += take * give.transpose() / rest;
    flows.push_back(std::move(F));
  }
  return flows;
}

/// Pairwise production matrix of a network whose reactions each conserve sum_i u_i, built from
/// reaction_flows.
inline PdSplit pd_split(const ProductionDestructionSystem& pd, const Vector& u) {
  const auto m = pd.species();
  if (u.size() != m) throw DimensionMismatch("pd_split: state dimension");
  for (Eigen::Index q = 0; q < m; ++q)
    if (pd.is_reactant(q) && !(u(q) > kFloorEps))
      throw NonpositiveState("pd_split: reactant species " + std::to_string(q) +
                             " is not strictly positive");
  const Vector w = pd.rates(u);
  const auto flows = reaction_flows(pd);
  PdSplit s;
  s.production = Matrix::Zero(m, m);
  for (Eigen::Index p = 0; p < pd.reactions(); ++p) s.production += w(p) * flows[static_cast<size_t>(p)];
  s.destruction = s.production.transpose();
  s.gross_production = pd.R * w;
  const Vector consumed = pd.L * w;
  s.destruction_rate = Vector::Zero(m);
  for (Eigen::Index i = 0; i < m; ++i)
    if (pd.is_reactant(i)) s.destruction_rate(i) = consumed(i) / u(i);
  return s;
}

/// Uniform periodic grid on (0,1]: x_i = i dx, i = 1..nx.
struct GridSpec {
  int nx = 100;

  double dx() const { return 1.0 / nx; }
  double x(int i) const { return i * dx(); }  // 1-based
  void validate() const {
    if (nx < 3) throw DomainError("grid needs at least 3 cells");
  }
};

using RhsFn = std::function<Vector(double, const Vector&)>;
using JacobianFn = std::function<Matrix(double, const Vector&)>;
/// Returns the number of components at which a state breaks a discretization assumption.
using StateCheckFn = std::function<int(const Vector&)>;

/// u' = f(t,u) with optional analytic Jacobian, linear invariants and mass-action structure.
struct IvpProblem {
  std::string name;
  Eigen::Index m = 0;
  RhsFn rhs;
  JacobianFn jacobian;
  /// Rows span the linear invariants w with w^T f(t,u) = 0.
  std::optional<Matrix> invariants;
  std::shared_ptr<const ProductionDestructionSystem> pd;
  /// Routing flag for the reference solver.
  bool stiff = false;
  Vector initial;
  double t_end = 1.0;
  /// Number of species blocks stored one after another (grid problems), each of length m / species.
  int species = 1;
  StateCheckFn state_check;
  std::map<std::string, double> params;

  Eigen::Index block_size() const { return m / species; }

  Vector block(const Vector& u, int s) const { return u.segment(s * block_size(), block_size()); }

  bool has_jacobian() const { return static_cast<bool>(jacobian); }
};

}  // namespace ssp
