#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ssp/errors.hpp"
#include "ssp/linalg.hpp"

namespace ssp {

/// Sensors tolerate this much excess over their bound (stage solves run to ~1e-10).
inline constexpr double kTolSensor = 1e-9;

enum class FunctionalKind { sup_norm, tv_seminorm, floor, ceil, max_fun, min_fun };

/// Sublinear functional used by monitors and sensors. floor and ceil carry chi / psi.
struct ConvexFunctional {
  FunctionalKind kind = FunctionalKind::sup_norm;
  double chi = 0.0;
  double psi = 0.0;

  static ConvexFunctional sup() { return {FunctionalKind::sup_norm}; }
  static ConvexFunctional tv() { return {FunctionalKind::tv_seminorm}; }
  static ConvexFunctional floor(double chi) { return {FunctionalKind::floor, chi, 0.0}; }
  static ConvexFunctional ceil(double psi) { return {FunctionalKind::ceil, 0.0, psi}; }
  static ConvexFunctional max() { return {FunctionalKind::max_fun}; }
  static ConvexFunctional min() { return {FunctionalKind::min_fun}; }

  /// Bound satisfied exactly by states inside the natural range (floor: -chi, ceil: psi).
  std::optional<double> natural_bound() const {
    if (kind == FunctionalKind::floor) return -chi;
    if (kind == FunctionalKind::ceil) return psi;
    return std::nullopt;
  }

  std::string to_string() const {
    std::ostringstream os;
    switch (kind) {
      case FunctionalKind::sup_norm: return "sup";
      case FunctionalKind::tv_seminorm: return "tv";
      case FunctionalKind::max_fun: return "max";
      case FunctionalKind::min_fun: return "min";
      case FunctionalKind::floor: os << "floor chi=" << chi; break;
      case FunctionalKind::ceil: os << "ceil psi=" << psi; break;
    }
    return os.str();
  }
};

/// Total variation with periodic closure: sum_i |u_{i+1} - u_i|, u_{m+1} = u_1.
inline double tv_periodic(const double* u, Eigen::Index m) {
  double s = 0.0;
  for (Eigen::Index i = 0; i + 1 < m; ++i) s += std::abs(u[i + 1] - u[i]);
  if (m > 1) s += std::abs(u[0] - u[m - 1]);
  return s;
}

inline double eval_functional(const ConvexFunctional& f, const Vector& u) {
  if (u.size() == 0) throw DimensionMismatch("functional of an empty state");
  switch (f.kind) {
    case FunctionalKind::sup_norm: return u.cwiseAbs().maxCoeff();
    case FunctionalKind::tv_seminorm: return tv_periodic(u.data(), u.size());
    case FunctionalKind::floor: return -std::min(f.chi, u.minCoeff());
    case FunctionalKind::ceil: return std::max(f.psi, u.maxCoeff());
    case FunctionalKind::max_fun: return u.maxCoeff();
    case FunctionalKind::min_fun: return -u.minCoeff();
  }
  return 0.0;
}

/// The functional applied to the single component x (used by local sensors).
inline double eval_component(const ConvexFunctional& f, double x) {
  switch (f.kind) {
    case FunctionalKind::sup_norm: return std::abs(x);
    case FunctionalKind::tv_seminorm: throw DomainError("TV seminorm has no componentwise form");
    case FunctionalKind::floor: return -std::min(f.chi, x);
    case FunctionalKind::ceil: return std::max(f.psi, x);
    case FunctionalKind::max_fun: return x;
    case FunctionalKind::min_fun: return -x;
  }
  return 0.0;
}

/// "floor chi=0", "ceil psi=1", "tv", "sup", "max", "min".
inline ConvexFunctional parse_functional(const std::string& text) {
  std::istringstream in(text);
  std::string name;
  if (!(in >> name)) throw ConfigError("empty functional specification");
  ConvexFunctional f;
  if (name == "sup" || name == "sup_norm") f.kind = FunctionalKind::sup_norm;
  else if (name == "tv" || name == "tv_seminorm") f.kind = FunctionalKind::tv_seminorm;
  else if (name == "floor") f.kind = FunctionalKind::floor;
  else if (name == "ceil") f.kind = FunctionalKind::ceil;
  else if (name == "max" || name == "max_fun") f.kind = FunctionalKind::max_fun;
  else if (name == "min" || name == "min_fun") f.kind = FunctionalKind::min_fun;
  else throw ConfigError("unknown functional '" + name + "'");
  std::string tok;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw ConfigError("functional parameter without '=': " + tok);
    const std::string key = tok.substr(0, eq);
    double value = 0.0;
    try {
      value = std::stod(tok.substr(eq + 1));
    } catch (const std::exception&) {
      throw ConfigError("functional parameter is not a number: " + tok);
    }
    if (key == "chi" && f.kind == FunctionalKind::floor) f.chi = value;
    else if (key == "psi" && f.kind == FunctionalKind::ceil) f.psi = value;
    else throw ConfigError("parameter '" + key + "' does not apply to " + name);
  }
  return f;
}

enum class SensorScope { global, local };

/// One functional bound. Local criteria may carry per-component bounds.
struct SensorCriterion {
  ConvexFunctional functional;
  double bound = 0.0;
  std::vector<double> component_bounds;
};

/// Conjunction of functional bounds; a floor/ceil range is two criteria in one spec.
struct SensorSpec {
  SensorScope scope = SensorScope::global;
  std::vector<SensorCriterion> criteria;

  static SensorSpec global(ConvexFunctional f, double bound) {
    return {SensorScope::global, {{f, bound, {}}}};
  }
  static SensorSpec local(ConvexFunctional f, double bound) {
    return {SensorScope::local, {{f, bound, {}}}};
  }
  /// chi <= u_i <= psi componentwise.
  static SensorSpec local_range(double chi, double psi) {
    return {SensorScope::local,
            {{ConvexFunctional::floor(chi), -chi, {}}, {ConvexFunctional::ceil(psi), psi, {}}}};
  }
  static SensorSpec global_range(double chi, double psi) {
    return {SensorScope::global,
            {{ConvexFunctional::floor(chi), -chi, {}}, {ConvexFunctional::ceil(psi), psi, {}}}};
  }

  void validate(Eigen::Index m) const {
    if (criteria.empty()) throw ConfigError("sensor without criteria");
    for (const auto& c : criteria) {
      if (scope == SensorScope::local && c.functional.kind == FunctionalKind::tv_seminorm)
        throw ConfigError("local sensors cannot use the TV seminorm");
      if (!c.component_bounds.empty()) {
        if (scope != SensorScope::local)
          throw ConfigError("per-component bounds require a local sensor");
        if (static_cast<Eigen::Index>(c.component_bounds.size()) != m)
          throw DimensionMismatch("local sensor bounds do not match the state dimension");
      }
    }
  }

  std::string to_string() const {
    std::ostringstream os;
    os << (scope == SensorScope::global ? "global" : "local");
    for (const auto& c : criteria) os << " [" << c.functional.to_string() << " <= " << c.bound << "]";
    return os.str();
  }
};

/// 1 if every criterion satisfies ||u|| <= M + tol_sensor.
inline int global_sensor(const SensorSpec& spec, const Vector& u) {
  if (spec.scope != SensorScope::global) throw DomainError("global_sensor needs a global spec");
  for (const auto& c : spec.criteria)
    if (!(eval_functional(c.functional, u) <= c.bound + kTolSensor)) return 0;
  return 1;
}

/// sigma_i = 1 if component i satisfies every criterion, else 0.
inline Eigen::ArrayXd local_sensor(const SensorSpec& spec, const Vector& u) {
  if (spec.scope != SensorScope::local) throw DomainError("local_sensor needs a local spec");
  spec.validate(u.size());
  Eigen::ArrayXd sigma = Eigen::ArrayXd::Ones(u.size());
  for (const auto& c : spec.criteria)
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      const double bound = c.component_bounds.empty() ? c.bound : c.component_bounds[i];
      if (!(eval_component(c.functional, u(i)) <= bound + kTolSensor)) sigma(i) = 0.0;
    }
  return sigma;
}

}  // namespace ssp
