#pragma once

#include <chrono>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ssp/analysis.hpp"
#include "ssp/errors.hpp"
#include "ssp/functionals.hpp"
#include "ssp/newton.hpp"
#include "ssp/problem.hpp"
#include "ssp/reference.hpp"
#include "ssp/steppers.hpp"
#include "ssp/tableau.hpp"

namespace ssp {

inline const std::vector<std::string>& method_ids() {
  static const std::vector<std::string> ids{"ie",   "cn",   "sdirk22", "trbdf2",    "trbdf2_clip",
                                            "trbdf2_blend", "trbdf2_part", "ros2", "mprk2",
                                            "ee",   "ieie", "reference"};
  return ids;
}

inline bool is_method(const std::string& id) {
  for (const auto& m : method_ids())
    if (m == id) return true;
  return false;
}

/// Butcher tableau behind a method id (ROS2 maps to its linear-equivalent RK pair).
inline ButcherTableau method_tableau(const std::string& id) {
  if (id == "ie") return implicit_euler_tableau();
  if (id == "cn") return crank_nicolson_tableau();
  if (id == "sdirk22") return sdirk22_tableau();
  if (id == "trbdf2" || id == "trbdf2_clip" || id == "trbdf2_blend" || id == "trbdf2_part")
    return trbdf2_tableau();
  if (id == "ieie") return ieie_tableau();
  if (id == "ee") return explicit_euler_tableau();
  if (id == "ros2") return ros2_tableau().linear_equivalent();
  throw UnknownMethod("method '" + id + "' has no Butcher tableau");
}

struct MethodOptions {
  NewtonConfig newton{};
  std::optional<SensorSpec> sensor;
  ReferenceConfig reference{};
};

/// Functional traced at every step; species < 0 means the whole state.
struct Monitor {
  std::string name;
  ConvexFunctional functional;
  int species = -1;
};

struct RunRecord {
  std::string method_id;
  std::string problem_id;
  double h = 0.0;
  std::vector<double> times;
  std::vector<Vector> states;
  StepStats stats;
  std::map<std::string, std::vector<double>> monitor_traces;
  std::vector<StepMode> modes;
  double wall_ms = 0.0;
  /// Species block layout copied from the problem.
  int species = 1;
  /// Set when the run stopped early because the state became non-finite or exploded.
  bool blew_up = false;

  Eigen::Index steps() const { return static_cast<Eigen::Index>(times.size()) - 1; }
  const Vector& final_state() const { return states.back(); }
};

/// Runs stop once a component exceeds this magnitude (or turns non-finite).
inline constexpr double kStateBlowUp = 1e12;

/// Number of fixed steps for a horizon: floor(T/h) when T/h is within 1e-9 of an integer from
/// below, otherwise the largest N with N h <= T.
inline long step_count(double T, double h) {
  if (!(h > 0.0) || !(T > 0.0)) throw DomainError("step count needs positive h and T");
  const double q = T / h;
  const double nearest = std::round(q);
  if (std::abs(q - nearest) <= 1e-9 * std::max(1.0, nearest)) return static_cast<long>(nearest);
  return static_cast<long>(std::floor(q));
}

namespace detail {

inline double monitor_value(const Monitor& mon, const Vector& u, Eigen::Index block) {
  if (mon.species < 0) return eval_functional(mon.functional, u);
  return eval_functional(mon.functional, Vector(u.segment(mon.species * block, block)));
}

}  // namespace detail

/// Fixed-step driver: N_t steps of the chosen method starting from (0, u0).
inline RunRecord integrate(const std::string& method, const IvpProblem& prob, const Vector& u0,
                           double h, double T, const std::vector<Monitor>& monitors = {},
                           const MethodOptions& opt = {}) {
  if (!is_method(method)) throw UnknownMethod("unknown method '" + method + "'");
  if (u0.size() != prob.m) throw DimensionMismatch("initial state does not match the problem");
  const long N = step_count(T, h);
  RunRecord rec;
  rec.method_id = method;
  rec.problem_id = prob.name;
  rec.h = h;
  rec.species = prob.species;
  const Eigen::Index block = prob.block_size();
  for (const auto& mon : monitors) {
    if (mon.species >= prob.species) throw DimensionMismatch("monitor species out of range");
    rec.monitor_traces[mon.name] = {};
  }
  auto record = [&](double t, const Vector& u) {
    rec.times.push_back(t);
    rec.states.push_back(u);
    for (const auto& mon : monitors)
      rec.monitor_traces[mon.name].push_back(detail::monitor_value(mon, u, block));
  };
  const auto start = std::chrono::steady_clock::now();
  record(0.0, u0);

  if (method == "reference") {
    std::vector<double> stops;
    for (long n = 1; n <= N; ++n) stops.push_back(static_cast<double>(n) * h);
    const Trajectory tr = reference_solve(prob, u0, 0.0, stops.back(), opt.reference, stops);
    for (long n = 1; n <= N; ++n) record(stops[static_cast<size_t>(n - 1)], tr.at(stops[static_cast<size_t>(n - 1)]));
    rec.stats.rhs_evals = tr.rhs_evals;
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return rec;
  }

  const bool needs_sensor = method == "trbdf2_blend" || method == "trbdf2_part";
  if (needs_sensor) {
    if (!opt.sensor) throw ConfigError("method '" + method + "' needs a sensor");
    const SensorScope want = method == "trbdf2_blend" ? SensorScope::global : SensorScope::local;
    if (opt.sensor->scope != want) throw ConfigError("method '" + method + "' needs a " +
                                                     (want == SensorScope::global ? "global" : "local") +
                                                     " sensor");
    opt.sensor->validate(prob.m);
  }
  if (method == "mprk2" && !prob.pd)
    throw DomainError("mprk2 needs a production-destruction system");

  std::optional<ButcherTableau> tab;
  if (method == "ie" || method == "cn" || method == "sdirk22" || method == "trbdf2" ||
      method == "trbdf2_clip" || method == "ieie")
    tab = method_tableau(method);
  const auto R = MonotonicityRadius::finite(trbdf2_family_radius(kTrbdf2Gamma));

  Vector u = u0;
  for (long n = 0; n < N; ++n) {
    const double t = static_cast<double>(n) * h;
    StepOutcome out;
    try {
      if (tab) out = dirk_step(*tab, prob, t, u, h, opt.newton);
      else if (method == "trbdf2_blend") out = trbdf2_blended_step(prob, t, u, h, *opt.sensor, opt.newton);
      else if (method == "trbdf2_part")
        out = trbdf2_partitioned_step(prob, t, u, h, *opt.sensor, R, opt.newton);
      else if (method == "ros2") out = ros2_step(prob, t, u, h, opt.newton);
      else if (method == "mprk2") out = mprk2_step(*prob.pd, u, h);
      else out = explicit_euler_step(prob, t, u, h);
    } catch (const Error& e) {
      throw StepFailure(method + ": step " + std::to_string(n + 1) + " at t=" + std::to_string(t) +
                            ": " + e.what(),
                        n + 1, t);
    }
    if (method == "trbdf2_clip") {
      auto [v, added] = clip_nonnegative(out.u_next);
      out.u_next = std::move(v);
      out.stats.clipped_mass += added;
    }
    rec.stats += out.stats;
    rec.modes.push_back(out.mode);
    u = std::move(out.u_next);
    if (prob.state_check && u.allFinite()) rec.stats.state_violations += prob.state_check(u);
    record(static_cast<double>(n + 1) * h, u);
    if (!u.allFinite() || u.cwiseAbs().maxCoeff() > kStateBlowUp) {
      rec.blew_up = true;
      break;
    }
  }
  rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

}  // namespace ssp
