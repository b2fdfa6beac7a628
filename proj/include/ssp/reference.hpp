#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "ssp/errors.hpp"
#include "ssp/linalg.hpp"
#include "ssp/newton.hpp"
#include "ssp/problem.hpp"
#include "ssp/steppers.hpp"
#include "ssp/tableau.hpp"

namespace ssp {

/// Accepted nodes of a reference solve with slopes, evaluated between nodes by cubic Hermite.
struct Trajectory {
  std::vector<double> t;
  std::vector<Vector> u;
  std::vector<Vector> f;
  long rhs_evals = 0;
  long accepted = 0;
  long rejected = 0;

  Vector at(double time) const {
    if (t.empty()) throw DomainError("empty trajectory");
    const double span = std::max(1.0, std::abs(t.back()));
    if (time < t.front() - 1e-12 * span || time > t.back() + 1e-12 * span)
      throw DomainError("trajectory sample outside the solved interval");
    auto it = std::lower_bound(t.begin(), t.end(), time);
    if (it == t.end()) return u.back();
    const auto k = static_cast<size_t>(it - t.begin());
    if (std::abs(t[k] - time) <= 1e-13 * span) return u[k];
    if (k == 0) return u.front();
    const double h = t[k] - t[k - 1];
    const double s = (time - t[k - 1]) / h;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
    return h00 * u[k - 1] + h10 * h * f[k - 1] + h01 * u[k] + h11 * h * f[k];
  }
};

struct ReferenceConfig {
  double abstol = 1e-14;
  double reltol = 1e-13;
  /// Stiff route: fixed TR-BDF2 step T / 2^level, verified against the halved step.
  int stiff_level = 20;
  NewtonConfig newton{};
};

namespace detail {

/// Dormand-Prince 5(4) coefficients.
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
};

inline void push_stop(std::vector<double>& stops, double t0, double T, const std::vector<double>& req) {
  for (double s : req)
    if (s > t0 && s < T) stops.push_back(s);
  stops.push_back(T);
  std::sort(stops.begin(), stops.end());
  stops.erase(std::unique(stops.begin(), stops.end()), stops.end());
}

}  // namespace detail

/// Adaptive Dormand-Prince 5(4) with a standard I-controller. Steps land exactly on each of the
/// requested stop times, which therefore become nodes of the trajectory.
inline Trajectory dopri5_solve(const RhsFn& f, const Vector& u0, double t0, double T, double abstol,
                               double reltol, const std::vector<double>& stops_req = {}) {
  if (!(abstol > 0.0 && reltol > 0.0)) throw DomainError("reference: tolerances must be positive");
  if (!(T > t0)) throw DomainError("reference: empty interval");
  using D = detail::Dopri5;
  std::vector<double> stops;
  detail::push_stop(stops, t0, T, stops_req);
  Trajectory tr;
  double t = t0;
  Vector u = u0;
  Vector k1 = f(t, u);
  tr.rhs_evals = 1;
  tr.t.push_back(t);
  tr.u.push_back(u);
  tr.f.push_back(k1);
  const double hmin = 1e-14 * (T - t0);
  auto err_norm = [&](const Vector& e, const Vector& a, const Vector& b) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < e.size(); ++i) {
      const double sc = abstol + reltol * std::max(std::abs(a(i)), std::abs(b(i)));
      s += (e(i) / sc) * (e(i) / sc);
    }
    return std::sqrt(s / static_cast<double>(std::max<Eigen::Index>(1, e.size())));
  };
  // Initial step guess.
  double h;
  {
    const double d0 = err_norm(u, u, u), d1 = err_norm(k1, u, u);
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h = std::min(h, T - t0);
  }
  size_t next_stop = 0;
  while (t < T) {
    while (next_stop < stops.size() && stops[next_stop] <= t) ++next_stop;
    const double target = stops[next_stop];
    bool hits = false;
    double hstep = h;
    if (t + hstep >= target - 1e-15 * std::abs(target)) {
      hstep = target - t;
      hits = true;
    }
    if (hstep < hmin && !hits) throw StepUnderflow("reference: step size underflow at t=" + std::to_string(t));
    const Vector k2 = f(t + D::c2 * hstep, u + hstep * (D::a21 * k1));
    const Vector k3 = f(t + D::c3 * hstep, u + hstep * (D::a31 * k1 + D::a32 * k2));
    const Vector k4 = f(t + D::c4 * hstep, u + hstep * (D::a41 * k1 + D::a42 * k2 + D::a43 * k3));
    const Vector k5 =
        f(t + D::c5 * hstep, u + hstep * (D::a51 * k1 + D::a52 * k2 + D::a53 * k3 + D::a54 * k4));
    const Vector k6 = f(t + hstep, u + hstep * (D::a61 * k1 + D::a62 * k2 + D::a63 * k3 +
                                                D::a64 * k4 + D::a65 * k5));
    const Vector un = u + hstep * (D::b1 * k1 + D::b3 * k3 + D::b4 * k4 + D::b5 * k5 + D::b6 * k6);
    const Vector k7 = f(t + hstep, un);
    tr.rhs_evals += 6;
    const Vector e =
        hstep * (D::e1 * k1 + D::e3 * k3 + D::e4 * k4 + D::e5 * k5 + D::e6 * k6 + D::e7 * k7);
    const double err = err_norm(e, u, un);
    if (!std::isfinite(err)) {
      ++tr.rejected;
      h = hstep * 0.2;
      continue;
    }
    const double fac = std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 5.0);
    if (err <= 1.0) {
      t = hits ? target : t + hstep;
      u = un;
      k1 = k7;
      tr.t.push_back(t);
      tr.u.push_back(u);
      tr.f.push_back(k1);
      ++tr.accepted;
      // A step shortened to land on a stop says nothing about the controller's step.
      h = hits ? std::max(h, hstep * fac) : hstep * fac;
    } else {
      ++tr.rejected;
      h = hstep * std::min(1.0, fac);
    }
  }
  return tr;
}

/// Fixed-step TR-BDF2 trajectory with N steps (nodes at t0 + n (T - t0) / N).
inline Trajectory trbdf2_fixed_solve(const IvpProblem& prob, const Vector& u0, double t0, double T,
                                     long N, const NewtonConfig& cfg) {
  static const ButcherTableau tab = trbdf2_tableau();
  Trajectory tr;
  const double h = (T - t0) / static_cast<double>(N);
  Vector u = u0;
  tr.t.push_back(t0);
  tr.u.push_back(u);
  tr.f.push_back(prob.rhs(t0, u));
  for (long n = 0; n < N; ++n) {
    const double t = t0 + static_cast<double>(n) * h;
    auto out = dirk_step(tab, prob, t, u, h, cfg);
    u = std::move(out.u_next);
    tr.rhs_evals += out.stats.rhs_evals;
    tr.t.push_back(t0 + static_cast<double>(n + 1) * h);
    tr.u.push_back(u);
    tr.f.push_back(prob.rhs(tr.t.back(), u));
  }
  tr.accepted = N;
  return tr;
}

/// Reference trajectory on [t0, T]. Non-stiff problems use adaptive DOPRI5(4); problems flagged
/// stiff use TR-BDF2 at h = (T - t0) / 2^level and must agree with the half-step run to
/// 10 * abstol at the final time.
inline Trajectory reference_solve(const IvpProblem& prob, const Vector& u0, double t0, double T,
                                  const ReferenceConfig& cfg = {},
                                  const std::vector<double>& stops = {}) {
  if (!prob.stiff) return dopri5_solve(prob.rhs, u0, t0, T, cfg.abstol, cfg.reltol, stops);
  if (cfg.stiff_level < 1 || cfg.stiff_level > 30) throw DomainError("reference: bad stiff level");
  const long N = 1L << cfg.stiff_level;
  Trajectory coarse = trbdf2_fixed_solve(prob, u0, t0, T, N, cfg.newton);
  Trajectory fine = trbdf2_fixed_solve(prob, u0, t0, T, 2 * N, cfg.newton);
  const double diff = sup_norm(coarse.u.back() - fine.u.back());
  if (!(diff < 10.0 * cfg.abstol))
    throw ReferenceNotConverged("reference: halving the step changed the solution by " +
                                std::to_string(diff));
  return fine;
}

}  // namespace ssp
