#pragma once

#include <cmath>
#include <istream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ssp/errors.hpp"
#include "ssp/linalg.hpp"

namespace ssp {

inline const double kTrbdf2Gamma = 2.0 - std::sqrt(2.0);
inline const double kRos2Gamma = 1.0 + 1.0 / std::sqrt(2.0);

enum class TableauKind { explicit_rk, dirk, fully_implicit };

/// Coefficients (A, b, c) of an s-stage Runge-Kutta method plus order metadata.
struct ButcherTableau {
  Matrix A;
  Vector b;
  Vector c;
  int order = 0;
  int stage_order = 0;
  std::string label;

  int stages() const { return static_cast<int>(b.size()); }

  TableauKind kind() const {
    const int s = stages();
    bool strictly_lower = true;
    for (int i = 0; i < s; ++i)
      for (int j = i; j < s; ++j) {
        if (j > i && A(i, j) != 0.0) return TableauKind::fully_implicit;
        if (j == i && A(i, i) != 0.0) strictly_lower = false;
      }
    return strictly_lower ? TableauKind::explicit_rk : TableauKind::dirk;
  }

  bool lower_triangular() const { return kind() != TableauKind::fully_implicit; }

  /// Throws DomainError on shape mismatch, non-finite entries or |c_i - sum_j a_ij| > 1e-12.
  void validate() const {
    const auto s = b.size();
    if (s < 1 || A.rows() != s || A.cols() != s || c.size() != s)
      throw DomainError("tableau '" + label + "': inconsistent shapes");
    if (!A.allFinite() || !b.allFinite() || !c.allFinite())
      throw DomainError("tableau '" + label + "': non-finite coefficient");
    for (Eigen::Index i = 0; i < s; ++i)
      if (std::abs(c(i) - A.row(i).sum()) > 1e-12)
        throw DomainError("tableau '" + label + "': row " + std::to_string(i) +
                          " does not sum to c");
  }
};

/// Linearly implicit method: (I - gamma h J) k_i = f(u + h sum alpha_ij k_j) + h J sum gamma_ij k_j.
struct RosenbrockTableau {
  Matrix alpha;
  Matrix gamma_mat;
  Vector b;
  double gamma_diag = 0.0;
  std::string label;

  int stages() const { return static_cast<int>(b.size()); }

  void validate() const {
    const auto s = b.size();
    if (alpha.rows() != s || alpha.cols() != s || gamma_mat.rows() != s || gamma_mat.cols() != s)
      throw DomainError("rosenbrock '" + label + "': inconsistent shapes");
    for (Eigen::Index i = 0; i < s; ++i) {
      if (gamma_mat(i, i) != gamma_diag)
        throw DomainError("rosenbrock '" + label + "': diagonal differs from gamma");
      for (Eigen::Index j = i + 1; j < s; ++j)
        if (gamma_mat(i, j) != 0.0 || alpha(i, j) != 0.0 || alpha(i, i) != 0.0)
          throw DomainError("rosenbrock '" + label + "': not lower triangular");
    }
  }

  /// RK tableau with A = alpha + Gamma; identical to the Rosenbrock method on linear problems.
  ButcherTableau linear_equivalent() const {
    ButcherTableau t;
    t.A = alpha + gamma_mat;
    t.b = b;
    t.c = t.A.rowwise().sum();
    t.order = 2;
    t.stage_order = 1;
    t.label = label + " (linear-equivalent RK)";
    return t;
  }
};

namespace detail {
inline ButcherTableau make_tableau(Matrix A, Vector b, int order, int stage_order,
                                   std::string label) {
  ButcherTableau t;
  t.c = A.rowwise().sum();
  t.A = std::move(A);
  t.b = std::move(b);
  t.order = order;
  t.stage_order = stage_order;
  t.label = std::move(label);
  return t;
}
}  // namespace detail

inline ButcherTableau explicit_euler_tableau() {
  return detail::make_tableau(Matrix::Zero(1, 1), Vector::Ones(1), 1, 1, "explicit Euler");
}

inline ButcherTableau implicit_euler_tableau() {
  return detail::make_tableau(Matrix::Ones(1, 1), Vector::Ones(1), 1, 1, "implicit Euler");
}

/// Trapezoidal rule written as a two-stage DIRK with an explicit first stage.
inline ButcherTableau crank_nicolson_tableau() {
  Matrix A(2, 2);
  A << 0.0, 0.0, 0.5, 0.5;
  Vector b(2);
  b << 0.5, 0.5;
  return detail::make_tableau(std::move(A), std::move(b), 2, 2, "Crank-Nicolson");
}

/// SSP-optimal two-stage second order SDIRK (two implicit midpoint substeps).
inline ButcherTableau sdirk22_tableau() {
  Matrix A(2, 2);
  A << 0.25, 0.0, 0.5, 0.25;
  Vector b(2);
  b << 0.5, 0.5;
  return detail::make_tableau(std::move(A), std::move(b), 2, 1, "SDIRK 2(2)");
}

/// Hybrid TR-BDF2 family: alpha = 1 is TR-BDF2, alpha = 0 is two implicit Euler substeps.
inline ButcherTableau hybrid_trbdf2_tableau(double alpha, double gamma) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("hybrid TR-BDF2: alpha outside [0,1]");
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("hybrid TR-BDF2: gamma outside (0,1)");
  const double den = alpha * (1.0 - gamma) + 1.0;
  const double w = (alpha * (1.0 - gamma) + gamma) / den;
  Matrix A = Matrix::Zero(3, 3);
  A(1, 0) = gamma * alpha / 2.0;
  A(1, 1) = gamma * (1.0 - alpha / 2.0);
  A(2, 0) = alpha / 2.0 * w;
  A(2, 1) = (1.0 - alpha / 2.0) * w;
  A(2, 2) = (1.0 - gamma) / den;
  Vector b = A.row(2).transpose();
  ButcherTableau t;
  t.A = std::move(A);
  t.b = std::move(b);
  t.c = Vector(3);
  t.c << 0.0, gamma, 1.0;
  t.order = alpha == 1.0 ? 2 : 1;
  t.stage_order = alpha == 1.0 ? 2 : 1;
  std::ostringstream os;
  os << "hybrid TR-BDF2 (alpha=" << alpha << ", gamma=" << gamma << ")";
  t.label = os.str();
  return t;
}

inline ButcherTableau trbdf2_tableau(double gamma = kTrbdf2Gamma) {
  auto t = hybrid_trbdf2_tableau(1.0, gamma);
  t.label = gamma == kTrbdf2Gamma ? "TR-BDF2" : "TR-BDF2 (gamma=" + std::to_string(gamma) + ")";
  return t;
}

inline ButcherTableau ieie_tableau(double gamma = kTrbdf2Gamma) {
  auto t = hybrid_trbdf2_tableau(0.0, gamma);
  t.label = "IE-IE";
  return t;
}

inline RosenbrockTableau ros2_tableau() {
  RosenbrockTableau r;
  r.gamma_diag = kRos2Gamma;
  r.alpha = Matrix::Zero(2, 2);
  r.alpha(1, 0) = 1.0;
  r.gamma_mat = Matrix::Zero(2, 2);
  r.gamma_mat(0, 0) = kRos2Gamma;
  r.gamma_mat(1, 0) = -2.0 * kRos2Gamma;
  r.gamma_mat(1, 1) = kRos2Gamma;
  r.b = Vector::Constant(2, 0.5);
  r.label = "ROS2";
  return r;
}

/// Drops stages that no other stage and no weight ever reads (zero column of A and b_j = 0).
inline ButcherTableau prune_unused_stages(const ButcherTableau& t) {
  std::vector<int> keep;
  for (int j = 0; j < t.stages(); ++j)
    if (t.b(j) != 0.0 || t.A.col(j).cwiseAbs().maxCoeff() != 0.0) keep.push_back(j);
  if (static_cast<int>(keep.size()) == t.stages()) return t;
  const auto n = static_cast<Eigen::Index>(keep.size());
  ButcherTableau r;
  r.A.resize(n, n);
  r.b.resize(n);
  r.c.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    r.b(i) = t.b(keep[i]);
    r.c(i) = t.c(keep[i]);
    for (Eigen::Index j = 0; j < n; ++j) r.A(i, j) = t.A(keep[i], keep[j]);
  }
  r.order = t.order;
  r.stage_order = t.stage_order;
  r.label = t.label;
  return r;
}

/// Plain-text tableau: s, then s rows of A, then b, then c (whitespace separated).
inline ButcherTableau read_tableau(std::istream& in, std::string label = "loaded") {
  int s = 0;
  if (!(in >> s) || s < 1) throw DomainError("tableau file: bad stage count");
  ButcherTableau t;
  t.A.resize(s, s);
  t.b.resize(s);
  t.c.resize(s);
  auto read = [&](double& x) {
    if (!(in >> x)) throw DomainError("tableau file: truncated or non-numeric entry");
  };
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j) read(t.A(i, j));
  for (int i = 0; i < s; ++i) read(t.b(i));
  for (int i = 0; i < s; ++i) read(t.c(i));
  t.label = std::move(label);
  t.validate();
  return t;
}

inline void write_tableau(std::ostream& out, const ButcherTableau& t) {
  const auto old = out.precision(17);
  out << t.stages() << '\n';
  for (int i = 0; i < t.stages(); ++i) {
    for (int j = 0; j < t.stages(); ++j) out << (j ? " " : "") << t.A(i, j);
    out << '\n';
  }
  for (int i = 0; i < t.stages(); ++i) out << (i ? " " : "") << t.b(i);
  out << '\n';
  for (int i = 0; i < t.stages(); ++i) out << (i ? " " : "") << t.c(i);
  out << '\n';
  out.precision(old);
}

}  // namespace ssp
