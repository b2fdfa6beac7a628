#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "ssp/errors.hpp"
#include "ssp/linalg.hpp"
#include "ssp/problem.hpp"

namespace ssp {

// ---------------------------------------------------------------------------------------------
// Brusselator

/// Six-species Brusselator network, species u1..u6, reactions
///   u1 -> u5 (k1),  u2 + u5 -> u3 + u6 (k2),  2 u5 + u6 -> 3 u5 (k3),  u5 -> u4 (k4).
inline ProductionDestructionSystem brusselator_network(double k1 = 1, double k2 = 1, double k3 = 1,
                                                       double k4 = 1) {
  ProductionDestructionSystem pd;
  pd.L = Matrix::Zero(6, 4);
  pd.R = Matrix::Zero(6, 4);
  pd.L(0, 0) = 1;
  pd.R(4, 0) = 1;
  pd.L(1, 1) = 1;
  pd.L(4, 1) = 1;
  pd.R(2, 1) = 1;
  pd.R(5, 1) = 1;
  pd.L(4, 2) = 2;
  pd.L(5, 2) = 1;
  pd.R(4, 2) = 3;
  pd.L(4, 3) = 1;
  pd.R(3, 3) = 1;
  pd.k = Vector(4);
  pd.k << k1, k2, k3, k4;
  pd.validate();
  return pd;
}

inline IvpProblem make_brusselator(double k1 = 1, double k2 = 1, double k3 = 1, double k4 = 1) {
  IvpProblem p;
  p.name = "brusselator";
  p.m = 6;
  p.species = 6;  // one component per species
  p.rhs = [=](double, const Vector& u) {
    Vector f(6);
    const double r2 = k2 * u(1) * u(4);
    const double r3 = k3 * u(4) * u(4) * u(5);
    f(0) = -k1 * u(0);
    f(1) = -r2;
    f(2) = r2;
    f(3) = k4 * u(4);
    f(4) = k1 * u(0) - r2 + r3 - k4 * u(4);
    f(5) = r2 - r3;
    return f;
  };
  p.jacobian = [=](double, const Vector& u) {
    Matrix J = Matrix::Zero(6, 6);
    const double d2_du2 = k2 * u(4), d2_du5 = k2 * u(1);
    const double d3_du5 = 2.0 * k3 * u(4) * u(5), d3_du6 = k3 * u(4) * u(4);
    J(0, 0) = -k1;
    J(1, 1) = -d2_du2;
    J(1, 4) = -d2_du5;
    J(2, 1) = d2_du2;
    J(2, 4) = d2_du5;
    J(3, 4) = k4;
    J(4, 0) = k1;
    J(4, 1) = -d2_du2;
    J(4, 4) = -d2_du5 + d3_du5 - k4;
    J(4, 5) = d3_du6;
    J(5, 1) = d2_du2;
    J(5, 4) = d2_du5 - d3_du5;
    J(5, 5) = -d3_du6;
    return J;
  };
  auto pd = std::make_shared<ProductionDestructionSystem>(brusselator_network(k1, k2, k3, k4));
  p.invariants = linear_invariants(pd->Q());
  p.pd = std::move(pd);
  p.initial = Vector(6);
  p.initial << 10.0, 10.0, 0.0, 0.0, 0.1, 0.1;
  p.t_end = 10.0;
  p.params = {{"k1", k1}, {"k2", k2}, {"k3", k3}, {"k4", k4}};
  return p;
}

// ---------------------------------------------------------------------------------------------
// Method-of-lines building blocks (periodic)

namespace detail {

inline int wrap(int i, int n) { return (i % n + n) % n; }

/// f_i += -v (u_i - u_{i-1}) / dx on the block starting at offset.
inline void add_upwind(const Vector& u, Vector& f, Eigen::Index offset, int n, double v, double dx) {
  for (int i = 0; i < n; ++i)
    f(offset + i) -= v * (u(offset + i) - u(offset + wrap(i - 1, n))) / dx;
}

inline void add_upwind_jacobian(Matrix& J, Eigen::Index offset, int n, double v, double dx) {
  for (int i = 0; i < n; ++i) {
    J(offset + i, offset + i) -= v / dx;
    J(offset + i, offset + wrap(i - 1, n)) += v / dx;
  }
}

inline void add_diffusion(const Vector& u, Vector& f, Eigen::Index offset, int n, double d,
                          double dx) {
  for (int i = 0; i < n; ++i)
    f(offset + i) += d *
                     (u(offset + wrap(i + 1, n)) - 2.0 * u(offset + i) + u(offset + wrap(i - 1, n))) /
                     (dx * dx);
}

inline void add_diffusion_jacobian(Matrix& J, Eigen::Index offset, int n, double d, double dx) {
  const double c = d / (dx * dx);
  for (int i = 0; i < n; ++i) {
    J(offset + i, offset + i) -= 2.0 * c;
    J(offset + i, offset + wrap(i + 1, n)) += c;
    J(offset + i, offset + wrap(i - 1, n)) += c;
  }
}

inline double indicator(bool inside, double value) { return inside ? value : 0.0; }

}  // namespace detail

/// u_t + v u_x = 0, first order upwind (v > 0), pulse initial state 1 on |x - 0.5| < 0.25.
inline IvpProblem make_advection(GridSpec grid = {}, double v = 1.0) {
  grid.validate();
  if (!(v > 0.0)) throw DomainError("advection: upwind stencil assumes v > 0");
  const int n = grid.nx;
  const double dx = grid.dx();
  IvpProblem p;
  p.name = "advection";
  p.m = n;
  p.rhs = [=](double, const Vector& u) {
    Vector f = Vector::Zero(n);
    detail::add_upwind(u, f, 0, n, v, dx);
    return f;
  };
  p.jacobian = [=](double, const Vector&) {
    Matrix J = Matrix::Zero(n, n);
    detail::add_upwind_jacobian(J, 0, n, v, dx);
    return J;
  };
  p.invariants = Matrix::Ones(1, n);
  p.initial = Vector(n);
  for (int i = 1; i <= n; ++i) p.initial(i - 1) = detail::indicator(std::abs(grid.x(i) - 0.5) < 0.25, 1.0);
  p.t_end = 1.0;
  p.params = {{"nx", n}, {"v", v}};
  return p;
}

struct AdrParams {
  double v = 0.1;
  double k = 0.3;
  double d1 = 1e-3;
  double d2 = 2e-3;
  double d3 = 1e-4;
};

/// Nutrient / phytoplankton / detritus source: returns (f1, f2, f3).
inline std::array<double, 3> geobio_source(double u1, double u2, double k) {
  const double r = u1 * u2 / (u1 + 1.0);
  return {-r, r - k * u2, k * u2};
}

/// Three species advected (upwind), diffused (central) and reacting with the geobio source.
/// State layout: [u1 block, u2 block, u3 block].
inline IvpProblem make_adr(GridSpec grid = {}, AdrParams prm = {}) {
  grid.validate();
  if (!(prm.v > 0.0)) throw DomainError("adr: upwind stencil assumes v > 0");
  if (prm.d1 < 0.0 || prm.d2 < 0.0 || prm.d3 < 0.0) throw DomainError("adr: negative diffusivity");
  const int n = grid.nx;
  const double dx = grid.dx();
  const std::array<double, 3> d{prm.d1, prm.d2, prm.d3};
  IvpProblem p;
  p.name = "adr";
  p.m = 3 * n;
  p.species = 3;
  p.rhs = [=](double, const Vector& u) {
    Vector f = Vector::Zero(3 * n);
    for (int s = 0; s < 3; ++s) {
      detail::add_upwind(u, f, s * n, n, prm.v, dx);
      detail::add_diffusion(u, f, s * n, n, d[s], dx);
    }
    for (int i = 0; i < n; ++i) {
      const auto src = geobio_source(u(i), u(n + i), prm.k);
      for (int s = 0; s < 3; ++s) f(s * n + i) += src[s];
    }
    return f;
  };
  p.jacobian = [=](double, const Vector& u) {
    Matrix J = Matrix::Zero(3 * n, 3 * n);
    for (int s = 0; s < 3; ++s) {
      detail::add_upwind_jacobian(J, s * n, n, prm.v, dx);
      detail::add_diffusion_jacobian(J, s * n, n, d[s], dx);
    }
    for (int i = 0; i < n; ++i) {
      const double u1 = u(i), u2 = u(n + i);
      const double dr1 = u2 / ((u1 + 1.0) * (u1 + 1.0));
      const double dr2 = u1 / (u1 + 1.0);
      J(i, i) -= dr1;
      J(i, n + i) -= dr2;
      J(n + i, i) += dr1;
      J(n + i, n + i) += dr2 - prm.k;
      J(2 * n + i, n + i) += prm.k;
    }
    return J;
  };
  p.invariants = Matrix::Ones(1, 3 * n);
  p.initial = Vector(3 * n);
  for (int i = 1; i <= n; ++i) {
    const double x = grid.x(i);
    p.initial(i - 1) = detail::indicator(std::abs(x - 0.5) < 0.25, 9.98);
    p.initial(n + i - 1) = detail::indicator(std::abs(x - 0.4) < 0.2, 2.0);
    p.initial(2 * n + i - 1) = detail::indicator(std::abs(x - 0.7) < 0.25, 1.0);
  }
  p.t_end = 1.0;
  p.params = {{"nx", n}, {"v", prm.v}, {"k", prm.k}, {"d1", prm.d1}, {"d2", prm.d2}, {"d3", prm.d3}};
  return p;
}

// ---------------------------------------------------------------------------------------------
// Flux-limited conservation laws

enum class LimiterKind { van_leer, koren };

inline double limiter(LimiterKind kind, double theta) {
  switch (kind) {
    case LimiterKind::van_leer: return (theta + std::abs(theta)) / (1.0 + std::abs(theta));
    case LimiterKind::koren:
      return std::max(0.0, std::min({2.0, 2.0 / 3.0 + theta / 3.0, 2.0 * theta}));
  }
  return 0.0;
}

/// Smoothness-ratio guard in the limiter argument.
inline constexpr double kLimiterEps = 1e-14;
/// Wave speeds below -this value mean the fixed left-biased upwinding is wrong.
inline constexpr double kWaveSpeedTol = 1e-8;

/// f_i = -(F_{i+1/2} - F_{i-1/2}) / dx with F_{i+1/2} = g_i + Psi(theta_{i+1/2}) (g_{i+1} - g_i) / 2,
/// theta_{i+1/2} = (g_i - g_{i-1} + eps) / (g_{i+1} - g_i + eps). Assumes g'(u) >= 0.
template <class Flux>
Vector limited_flux_rhs(const Vector& u, double dx, LimiterKind kind, Flux&& flux) {
  const int n = static_cast<int>(u.size());
  Vector g(n);
  for (int i = 0; i < n; ++i) g(i) = flux(u(i));
  Vector F(n);  // F(i) = F_{i+1/2}
  for (int i = 0; i < n; ++i) {
    const double dplus = g(detail::wrap(i + 1, n)) - g(i);
    const double dminus = g(i) - g(detail::wrap(i - 1, n));
    const double theta = (dminus + kLimiterEps) / (dplus + kLimiterEps);
    F(i) = g(i) + 0.5 * limiter(kind, theta) * dplus;
  }
  Vector f(n);
  for (int i = 0; i < n; ++i) f(i) = -(F(i) - F(detail::wrap(i - 1, n))) / dx;
  return f;
}

inline double burgers_flux(double u) { return 0.5 * u * u; }
inline double burgers_speed(double u) { return u; }

inline double buckley_leverett_flux(double u) {
  const double a = u * u;
  return a / (a + (1.0 - u) * (1.0 - u) / 3.0);
}

inline double buckley_leverett_speed(double u) {
  const double den = u * u + (1.0 - u) * (1.0 - u) / 3.0;
  return 2.0 * u * (1.0 - u) / (3.0 * den * den);
}

namespace detail {

template <class Flux, class Speed>
IvpProblem make_conservation_law(std::string name, GridSpec grid, LimiterKind kind, Flux flux,
                                 Speed speed) {
  grid.validate();
  const int n = grid.nx;
  const double dx = grid.dx();
  IvpProblem p;
  p.name = std::move(name);
  p.m = n;
  p.rhs = [=](double, const Vector& u) { return limited_flux_rhs(u, dx, kind, flux); };
  p.invariants = Matrix::Ones(1, n);
  p.state_check = [=](const Vector& u) {
    int bad = 0;
    for (Eigen::Index i = 0; i < u.size(); ++i)
      if (speed(u(i)) < -kWaveSpeedTol) ++bad;
    return bad;
  };
  p.params = {{"nx", n}};
  return p;
}

}  // namespace detail

/// u_t + (u^2/2)_x = 0, van Leer limiter, u0 = 1/2 + sin(2 pi x)/4, T = 1.
inline IvpProblem make_burgers(GridSpec grid = {}) {
  auto p = detail::make_conservation_law("burgers", grid, LimiterKind::van_leer, burgers_flux,
                                         burgers_speed);
  p.initial = Vector(grid.nx);
  for (int i = 1; i <= grid.nx; ++i)
    p.initial(i - 1) = 0.5 + 0.25 * std::sin(2.0 * std::numbers::pi * grid.x(i));
  p.t_end = 1.0;
  return p;
}

/// Buckley-Leverett flux u^2 / (u^2 + (1-u)^2/3), Koren limiter, u0 = 1/2 for x <= 1/2, T = 1/8.
inline IvpProblem make_buckley_leverett(GridSpec grid = {}) {
  auto p = detail::make_conservation_law("buckley_leverett", grid, LimiterKind::koren,
                                         buckley_leverett_flux, buckley_leverett_speed);
  p.initial = Vector(grid.nx);
  for (int i = 1; i <= grid.nx; ++i) p.initial(i - 1) = grid.x(i) <= 0.5 ? 0.5 : 0.0;
  p.t_end = 0.125;
  return p;
}

// ---------------------------------------------------------------------------------------------

inline const std::vector<std::string>& problem_ids() {
  static const std::vector<std::string> ids{"brusselator", "advection", "adr", "burgers",
                                            "buckley_leverett"};
  return ids;
}

/// Builds a benchmark problem by id. Recognized overrides: nx, v, k, d1, d2, d3 (and k1..k4).
inline IvpProblem make_problem(const std::string& id, const std::map<std::string, double>& over = {}) {
  auto get = [&](const std::string& key, double def) {
    auto it = over.find(key);
    return it == over.end() ? def : it->second;
  };
  auto allow = [&](std::initializer_list<const char*> keys) {
    for (const auto& [key, value] : over) {
      bool ok = false;
      for (const char* k : keys) ok = ok || key == k;
      if (!ok) throw ConfigError("problem '" + id + "' does not take parameter '" + key + "'");
    }
  };
  GridSpec grid;
  grid.nx = static_cast<int>(get("nx", 100));
  if (id == "brusselator") {
    allow({"k1", "k2", "k3", "k4"});
    return make_brusselator(get("k1", 1), get("k2", 1), get("k3", 1), get("k4", 1));
  }
  if (id == "advection") {
    allow({"nx", "v"});
    return make_advection(grid, get("v", 1.0));
  }
  if (id == "adr") {
    allow({"nx", "v", "k", "d1", "d2", "d3"});
    AdrParams prm;
    prm.v = get("v", prm.v);
    prm.k = get("k", prm.k);
    prm.d1 = get("d1", prm.d1);
    prm.d2 = get("d2", prm.d2);
    prm.d3 = get("d3", prm.d3);
    return make_adr(grid, prm);
  }
  if (id == "burgers") {
    allow({"nx"});
    return make_burgers(grid);
  }
  if (id == "buckley_leverett") {
    allow({"nx"});
    return make_buckley_leverett(grid);
  }
  throw ConfigError("unknown problem '" + id + "'");
}

}  // namespace ssp
