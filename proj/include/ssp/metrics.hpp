#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "ssp/errors.hpp"
#include "ssp/functionals.hpp"
#include "ssp/integrate.hpp"
#include "ssp/linalg.hpp"
#include "ssp/problem.hpp"

namespace ssp {

/// TV values above this are reported as infinite.
inline constexpr double kTvBlowUp = 1e6;

namespace detail {

inline Eigen::Index block_of(const RunRecord& run, int species) {
  if (run.states.empty()) throw DimensionMismatch("empty run");
  if (species < 0 || species >= run.species) throw DimensionMismatch("species index out of range");
  return run.states.front().size() / run.species;
}

inline void check_same_times(const RunRecord& a, const RunRecord& b) {
  if (a.times.size() != b.times.size())
    throw TimeGridMismatch("runs have different numbers of samples");
  for (size_t n = 0; n < a.times.size(); ++n)
    if (std::abs(a.times[n] - b.times[n]) > 1e-12 * std::max(1.0, std::abs(a.times[n])))
      throw TimeGridMismatch("runs are sampled at different times");
}

}  // namespace detail

/// max_n |u_i^n - ref_i^n| for an ODE species (one component per species); for grid problems the
/// maximum also runs over the species' grid block.
inline double linf_time_error(const RunRecord& run, const RunRecord& ref, int species) {
  detail::check_same_times(run, ref);
  const auto block = detail::block_of(run, species);
  if (ref.states.front().size() != run.states.front().size())
    throw DimensionMismatch("runs have different state dimensions");
  double e = 0.0;
  for (size_t n = 0; n < run.states.size(); ++n) {
    const auto d = (run.states[n].segment(species * block, block) -
                    ref.states[n].segment(species * block, block))
                       .cwiseAbs();
    if (!d.allFinite()) return std::numeric_limits<double>::infinity();
    e = std::max(e, d.maxCoeff());
  }
  return e;
}

/// max_j |u_{i,j}(T) - ref_{i,j}(T)|.
inline double linf_space_error_at_T(const RunRecord& run, const RunRecord& ref, int species) {
  const auto block = detail::block_of(run, species);
  if (ref.states.back().size() != run.states.back().size())
    throw DimensionMismatch("runs have different state dimensions");
  if (std::abs(run.times.back() - ref.times.back()) > 1e-12 * std::max(1.0, std::abs(run.times.back())))
    throw TimeGridMismatch("runs end at different times");
  const auto d = (run.final_state().segment(species * block, block) -
                  ref.final_state().segment(species * block, block))
                     .cwiseAbs();
  if (!d.allFinite()) return std::numeric_limits<double>::infinity();
  return d.maxCoeff();
}

/// max_n TV(u_i^n) with periodic closure; +inf once a state is non-finite or TV exceeds 1e6.
inline double tv_linf_time(const RunRecord& run, int species) {
  const auto block = detail::block_of(run, species);
  double tv = 0.0;
  for (const auto& u : run.states) {
    const Vector b = u.segment(species * block, block);
    if (!b.allFinite()) return std::numeric_limits<double>::infinity();
    const double v = tv_periodic(b.data(), block);
    if (!(v <= kTvBlowUp)) return std::numeric_limits<double>::infinity();
    tv = std::max(tv, v);
  }
  return tv;
}

/// max_n sup|W (u^n - u^0)| for the problem's invariant rows W.
inline double check_linear_invariants(const RunRecord& run, const IvpProblem& prob) {
  if (!prob.invariants || prob.invariants->rows() == 0) throw NoInvariants("problem '" + prob.name + "' has no linear invariants");
  const Matrix& W = *prob.invariants;
  if (run.states.empty()) return 0.0;
  const Vector w0 = W * run.states.front();
  double drift = 0.0;
  for (const auto& u : run.states) {
    const Vector d = W * u - w0;
    if (!d.allFinite()) return std::numeric_limits<double>::infinity();
    drift = std::max(drift, sup_norm(d));
  }
  return drift;
}

struct WorkloadSummary {
  long rhs_evals = 0;
  long newton_iters = 0;
  double wall_ms = 0.0;
};

inline WorkloadSummary workload_summary(const RunRecord& run) {
  return {run.stats.rhs_evals, run.stats.newton_iters, run.wall_ms};
}

}  // namespace ssp
