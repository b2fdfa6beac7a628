// One PASS/FAIL line per acceptance criterion; nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ssp/experiment.hpp"

using namespace ssp;

namespace {

struct Check {
  std::ostringstream notes;
  bool ok = true;
  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      notes << "\n    failed: " << what;
    }
  }
};

int failures = 0;

void criterion(int n, const std::string& title, const std::function<void(Check&)>& body) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.ok = false;
    c.notes << "\n    exception: " << e.what();
  }
  const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s criterion %d: %s (%.2f s)%s\n", c.ok ? "PASS" : "FAIL", n, title.c_str(), sec,
              c.notes.str().c_str());
  std::fflush(stdout);
  if (!c.ok) ++failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void annotations(Check& c, const TableArtifact& tab) {
  for (const auto& a : tab.annotations) {
    c.notes << "\n    " << (a.pass ? "ok  " : "BAD ") << a.description;
    if (!a.pass) c.ok = false;
  }
  if (tab.annotations.empty()) c.expect(false, "no annotations produced");
}

double sup_diff(const RunRecord& a, const RunRecord& b) {
  if (a.states.size() != b.states.size()) return std::numeric_limits<double>::infinity();
  double d = 0.0;
  for (size_t n = 0; n < a.states.size(); ++n) d = std::max(d, (a.states[n] - b.states[n]).cwiseAbs().maxCoeff());
  return d;
}

}  // namespace

int main() {
  criterion(1, "monotonicity radii", [](Check& c) {
    const auto t0 = std::chrono::steady_clock::now();
    c.expect(radius_abs_monotonicity(implicit_euler_tableau()).is_infinite(), "IE radius is the unbounded sentinel");
    const double cn = radius_abs_monotonicity(crank_nicolson_tableau()).value();
    const double sd = radius_abs_monotonicity(sdirk22_tableau()).value();
    const double tr = radius_abs_monotonicity(trbdf2_tableau()).value();
    const double ro = radius_abs_monotonicity(ros2_tableau().linear_equivalent()).value();
    c.notes << "\n    CN " << fmt(cn) << ", SDIRK 2(2) " << fmt(sd) << ", TR-BDF2 " << fmt(tr) << ", ROS2 " << fmt(ro);
    c.expect(std::abs(cn - 2.0) <= 1e-8, "CN = 2");
    c.expect(std::abs(sd - 4.0) <= 1e-8, "SDIRK 2(2) = 4");
    c.expect(std::abs(tr - (1.0 + std::sqrt(2.0))) <= 1e-8, "TR-BDF2 = 1 + sqrt 2");
    c.expect(std::abs(ro) <= 1e-8, "ROS2 = 0");
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> g(0.02, 0.98);
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
      const double gamma = g(gen);
      worst = std::max(worst, std::abs(trbdf2_family_radius(gamma) -
                                       radius_abs_monotonicity(trbdf2_tableau(gamma)).value()));
    }
    c.notes << "\n    family closed form vs bisection, 50 random gamma: max diff " << fmt(worst);
    c.expect(worst <= 1e-8, "family radius matches bisection");
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.expect(sec < 1.0, "runtime below 1 s");
  });

  criterion(2, "stability function identities", [](Check& c) {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> d(-5.0, 5.0);
    const double gamma = kTrbdf2Gamma;
    std::vector<ButcherTableau> tabs{implicit_euler_tableau(), crank_nicolson_tableau(), sdirk22_tableau(),
                                     trbdf2_tableau(), ieie_tableau(), ros2_tableau().linear_equivalent()};
    for (double a : {0.0, 0.25, 0.5, 0.75, 1.0}) tabs.push_back(hybrid_trbdf2_tableau(a, gamma));
    double worst = 0.0;
    for (const auto& t : tabs)
      for (int k = 0; k < 100; ++k) {
        const std::complex<double> z(d(gen), d(gen));
        const auto p = stability_function(t, z), q = stability_function_resolvent(t, z);
        worst = std::max(worst, std::abs(p - q) / std::max(1.0, std::abs(q)));
      }
    c.notes << "\n    determinant vs resolvent: max rel diff " << fmt(worst);
    c.expect(worst <= 1e-11, "determinant form equals resolvent form");
    double alpha0 = 0.0;
    const auto h0 = hybrid_trbdf2_tableau(0.0, gamma);
    for (int k = 0; k < 100; ++k) {
      const double xi = d(gen);
      const double closed = 1.0 / (1.0 - xi + gamma * (1.0 - gamma) * xi * xi);
      alpha0 = std::max(alpha0, std::abs(stability_function(h0, xi) - closed));
    }
    c.notes << "\n    alpha=0 closed form: max diff " << fmt(alpha0);
    c.expect(alpha0 <= 1e-11, "alpha=0 closed form");
    const std::complex<double> big(-1e6, 0.0);
    auto lstable = [&](const std::string& name, double v) {
      c.notes << "\n    |phi(-1e6)| " << name << " = " << fmt(v);
      c.expect(v <= 1e-5, name + " L-stable");
    };
    lstable("IE", std::abs(stability_function(implicit_euler_tableau(), big)));
    lstable("TR-BDF2", std::abs(stability_function(trbdf2_tableau(), big)));
    for (double a : {0.0, 0.25, 0.5, 0.75, 1.0})
      lstable("hybrid alpha=" + fmt(a), std::abs(stability_function(hybrid_trbdf2_tableau(a, gamma), big)));
    lstable("ROS2", std::abs(stability_function(ros2_tableau(), big)));
    const double cn = std::abs(stability_function(crank_nicolson_tableau(), big));
    c.notes << "\n    |phi(-1e6)| CN = " << fmt(cn);
    c.expect(cn >= 0.9, "CN not damped");
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.expect(sec < 1.0, "runtime below 1 s");
  });

  TableArtifact adr;
  criterion(3, "advection TV table", [](Check& c) { annotations(c, reproduce_table("tv_advection")); });

  criterion(4, "ADR TV table", [&](Check& c) {
    ExperimentConfig cfg = canonical_config("tv_adr");
    cfg.metrics.push_back("invariant_drift");
    adr = run_experiment(cfg);
    annotate_table(adr);
    annotations(c, adr);
  });

  criterion(5, "Burgers and Buckley-Leverett TV tables", [](Check& c) {
    for (const char* n : {"tv_burgers", "tv_buckley_leverett"}) {
      c.notes << "\n  " << n;
      annotations(c, reproduce_table(n));
    }
  });

  TableArtifact bruss;
  criterion(6, "Brusselator convergence orders", [&](Check& c) {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig cfg;
    cfg.name = "brusselator_orders";
    cfg.problem = "brusselator";
    cfg.methods = {"ie", "cn", "sdirk22", "trbdf2", "ros2", "mprk2", "ieie", "trbdf2_blend"};
    cfg.steps = {0.04, 0.02, 0.01, 0.005};
    cfg.metrics = {"err_linf_time", "invariant_drift"};
    cfg.species = 0;  // u1
    cfg.newton.tol = 1e-12;
    cfg.reference.abstol = cfg.reference.reltol = 1e-12;
    cfg.sensors["trbdf2_blend"] = SensorConfig{SensorScope::global, {{"floor chi=0", "0"}}};
    bruss = run_experiment(cfg);
    for (const auto& f : bruss.failures) c.expect(false, f);
    // order from the finest pair of steps
    for (const char* m : {"ie", "cn", "sdirk22", "trbdf2", "ros2", "mprk2"}) {
      const double e1 = bruss.cell("err_linf_time", 0.01, m).value;
      const double e2 = bruss.cell("err_linf_time", 0.005, m).value;
      const double p = std::log2(e1 / e2);
      c.notes << "\n    " << m << ": errors";
      for (double h : {0.04, 0.02, 0.01, 0.005}) c.notes << ' ' << fmt(bruss.cell("err_linf_time", h, m).value);
      c.notes << ", order " << fmt(p);
      const bool first = std::string(m) == "ie";
      c.expect(first ? (p >= 0.85 && p <= 1.15) : (p >= 1.8 && p <= 2.2), std::string(m) + " order");
    }
    // informational: worst species
    const auto prob = make_brusselator();
    MethodOptions opt;
    opt.newton = cfg.newton;
    opt.reference = cfg.reference;
    const auto r1 = integrate("reference", prob, prob.initial, 0.01, prob.t_end, {}, opt);
    const auto r2 = integrate("reference", prob, prob.initial, 0.005, prob.t_end, {}, opt);
    c.notes << "\n    max over species (not gated):";
    for (const char* m : {"ie", "cn", "sdirk22", "trbdf2", "ros2", "mprk2"}) {
      const auto a = integrate(m, prob, prob.initial, 0.01, prob.t_end, {}, opt);
      const auto b = integrate(m, prob, prob.initial, 0.005, prob.t_end, {}, opt);
      double e1 = 0, e2 = 0;
      for (int s = 0; s < 6; ++s) {
        e1 = std::max(e1, linf_time_error(a, r1, s));
        e2 = std::max(e2, linf_time_error(b, r2, s));
      }
      c.notes << ' ' << m << ' ' << fmt(std::log2(e1 / e2));
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.expect(sec < 60.0, "runtime below 1 min");
  });

  criterion(7, "MPRK positivity and conservation on Brusselator", [](Check& c) {
    const auto p = make_brusselator();
    for (double h : {0.1, 0.5, 1.0}) {
      const auto run = integrate("mprk2", p, p.initial, h, p.t_end);
      double min_state = std::numeric_limits<double>::infinity(), drift = 0.0;
      for (size_t n = 1; n < run.states.size(); ++n) {
        min_state = std::min(min_state, run.states[n].minCoeff());
        drift = std::max(drift, std::abs(run.states[n].sum() - run.states[n - 1].sum()));
      }
      c.notes << "\n    h=" << fmt(h) << ": min state after step 0 " << fmt(min_state)
              << ", max per-step sum drift " << fmt(drift);
      c.expect(min_state > 0.0, "positive states at h=" + fmt(h));
      c.expect(drift <= 1e-12, "sum conserved at h=" + fmt(h));
    }
  });

  criterion(8, "linear invariant conservation", [&](Check& c) {
    auto scan = [&](const TableArtifact& tab, const std::string& label) {
      if (!tab.cells.count("invariant_drift")) {
        c.expect(false, label + " runs missing");
        return;
      }
      for (const auto& m : tab.methods) {
        if (m == "trbdf2_clip" || m == "trbdf2_part") continue;
        double worst = 0.0;
        bool ok = true;
        for (double h : tab.steps) {
          const auto& cell = tab.cell("invariant_drift", h, m);
          ok = ok && cell.finite();
          if (cell.finite()) worst = std::max(worst, cell.value);
        }
        c.notes << "\n    " << label << ' ' << m << ": max drift " << fmt(worst);
        c.expect(ok && worst <= 1e-9, label + " " + m + " conserves invariants");
      }
    };
    scan(bruss, "brusselator");
    scan(adr, "adr");
    const auto p = make_advection();
    const auto clip = integrate("trbdf2_clip", p, p.initial, 0.04, 1.0);
    const double d = check_linear_invariants(clip, p);
    c.notes << "\n    advection trbdf2_clip h=0.04: added mass " << fmt(clip.stats.clipped_mass) << ", drift " << fmt(d);
    c.expect(clip.stats.clipped_mass > 0.0 && d > 0.0, "clipping breaks conservation");
  });

  criterion(9, "partitioned/blended degeneracy", [](Check& c) {
    struct Case {
      IvpProblem prob;
      double h;
      SensorSpec global, local;
    };
    std::vector<Case> quiet{
        {make_advection(), 0.01, SensorSpec::global(ConvexFunctional::floor(0), 0.0),
         SensorSpec::local_range(0.0, 1.0)},
        {make_burgers(), 0.0025, SensorSpec::global(ConvexFunctional::tv(), 1.0), SensorSpec::local_range(0.25, 0.75)},
    };
    for (const auto& q : quiet) {
      const double T = q.prob.t_end;
      const auto base = integrate("trbdf2", q.prob, q.prob.initial, q.h, T);
      MethodOptions ob, op;
      ob.sensor = q.global;
      op.sensor = q.local;
      const auto blend = integrate("trbdf2_blend", q.prob, q.prob.initial, q.h, T, {}, ob);
      const auto part = integrate("trbdf2_part", q.prob, q.prob.initial, q.h, T, {}, op);
      const double db = sup_diff(blend, base), dp = sup_diff(part, base);
      c.notes << "\n    " << q.prob.name << " h=" << fmt(q.h) << ": fallback steps blend " << blend.stats.fallback_steps
              << " part " << part.stats.fallback_steps << ", sup diff blend " << fmt(db) << " part " << fmt(dp);
      c.expect(blend.stats.fallback_steps == 0 && part.stats.fallback_steps == 0, q.prob.name + " run is sensor-quiet");
      c.expect(db <= 1e-8 && dp <= 1e-8, q.prob.name + " matches plain TR-BDF2");
    }
    // blended runs past the threshold must still honour the bound
    struct Stress {
      IvpProblem prob;
      std::vector<double> steps;
      SensorSpec spec;
    };
    std::vector<Stress> stress{
        {make_advection(), {0.0241, 0.04, 0.06, 0.1}, SensorSpec::global(ConvexFunctional::floor(0), 0.0)},
        {make_advection(), {0.04, 0.1}, SensorSpec::global(ConvexFunctional::tv(), 2.0)},
        {make_burgers(), {0.02, 0.06, 0.1}, SensorSpec::global(ConvexFunctional::tv(), 1.0)},
        {make_buckley_leverett(), {0.01, 0.025}, SensorSpec::global(ConvexFunctional::tv(), 1.0)},
    };
    for (const auto& s : stress)
      for (double h : s.steps) {
        MethodOptions o;
        o.sensor = s.spec;
        const auto run = integrate("trbdf2_blend", s.prob, s.prob.initial, h, s.prob.t_end, {}, o);
        double excess = -std::numeric_limits<double>::infinity();
        for (const auto& u : run.states)
          excess = std::max(excess, eval_functional(s.spec.criteria[0].functional, u) - s.spec.criteria[0].bound);
        c.notes << "\n    " << s.prob.name << " blend " << s.spec.criteria[0].functional.to_string() << " h=" << fmt(h)
                << ": fallback steps " << run.stats.fallback_steps << ", worst excess over bound " << fmt(excess);
        c.expect(excess <= 1e-9, s.prob.name + " blended run respects its bound");
      }
  });

  std::printf("%s: %d of 9 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
