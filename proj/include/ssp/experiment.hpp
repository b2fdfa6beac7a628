#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "ssp/analysis.hpp"
#include "ssp/errors.hpp"
#include "ssp/functionals.hpp"
#include "ssp/integrate.hpp"
#include "ssp/metrics.hpp"
#include "ssp/problems.hpp"
#include "ssp/reference.hpp"
#include "ssp/tableau.hpp"

namespace ssp {

inline constexpr const char* kToolVersion = "1.0.0";

inline const std::vector<std::string>& metric_ids() {
  static const std::vector<std::string> ids{"err_linf_time", "err_linf_space_T", "tv_linf_time",
                                            "invariant_drift", "rhs_evals", "newton_iters", "wall_ms"};
  return ids;
}

/// One bound of a sensor as written in a config: functional text plus an optional bound.
/// A bound of "initial" is replaced by the functional's value at the initial state.
struct SensorCriterionText {
  std::string functional;
  std::optional<std::string> bound;
};

struct SensorConfig {
  SensorScope scope = SensorScope::global;
  std::vector<SensorCriterionText> criteria;

  SensorSpec resolve(const Vector& u0, Eigen::Index block, int species) const {
    SensorSpec spec;
    spec.scope = scope;
    for (const auto& c : criteria) {
      SensorCriterion sc;
      sc.functional = parse_functional(c.functional);
      if (!c.bound) {
        auto nb = sc.functional.natural_bound();
        if (!nb) throw ConfigError("sensor functional '" + c.functional + "' needs an explicit bound");
        sc.bound = *nb;
      } else if (*c.bound == "initial") {
        const Vector b = species < 0 ? u0 : Vector(u0.segment(species * block, block));
        sc.bound = eval_functional(sc.functional, b);
      } else {
        try {
          sc.bound = std::stod(*c.bound);
        } catch (const std::exception&) {
          throw ConfigError("sensor bound is not a number: " + *c.bound);
        }
      }
      spec.criteria.push_back(sc);
    }
    return spec;
  }
};

/// "floor chi=0 <= 0; ceil psi=1" -> criteria.
inline std::vector<SensorCriterionText> parse_criteria(const std::string& text) {
  std::vector<std::string> parts;
  boost::split(parts, text, boost::is_any_of(";"));
  std::vector<SensorCriterionText> out;
  for (auto part : parts) {
    boost::trim(part);
    if (part.empty()) continue;
    SensorCriterionText c;
    const auto le = part.find("<=");
    if (le == std::string::npos) {
      c.functional = part;
    } else {
      c.functional = boost::trim_copy(part.substr(0, le));
      c.bound = boost::trim_copy(part.substr(le + 2));
    }
    parse_functional(c.functional);  // validate early
    out.push_back(c);
  }
  if (out.empty()) throw ConfigError("sensor without criteria");
  return out;
}

struct ExperimentConfig {
  std::string name = "experiment";
  std::string problem;
  std::map<std::string, double> params;
  std::optional<double> t_end;
  std::vector<std::string> methods;
  std::vector<double> steps;
  std::map<std::string, SensorConfig> sensors;
  NewtonConfig newton{};
  std::string output_dir;
  std::vector<std::string> metrics{"tv_linf_time"};
  /// Species block used by error and TV metrics; -1 takes the maximum over all species.
  int species = 0;
  ReferenceConfig reference{};
  std::string cache_dir;

  void validate() const {
    if (problem.empty()) throw ConfigError("config: problem id missing");
    if (std::find(problem_ids().begin(), problem_ids().end(), problem) == problem_ids().end())
      throw ConfigError("config: unknown problem '" + problem + "'");
    if (methods.empty()) throw ConfigError("config: empty method list");
    for (const auto& m : methods) {
      if (!is_method(m)) throw ConfigError("config: unknown method '" + m + "'");
      if ((m == "trbdf2_blend" || m == "trbdf2_part") && !sensors.count(m))
        throw ConfigError("config: method '" + m + "' needs a [sensor." + m + "] section");
    }
    if (steps.empty()) throw ConfigError("config: empty step-size list");
    for (double h : steps)
      if (!(h > 0.0)) throw ConfigError("config: step sizes must be positive");
    if (t_end && !(*t_end > 0.0)) throw ConfigError("config: t_end must be positive");
    if (metrics.empty()) throw ConfigError("config: empty metric list");
    for (const auto& m : metrics)
      if (std::find(metric_ids().begin(), metric_ids().end(), m) == metric_ids().end())
        throw ConfigError("config: unknown metric '" + m + "'");
    if (!(reference.abstol > 0.0 && reference.reltol > 0.0))
      throw ConfigError("config: reference tolerances must be positive");
    newton.validate();
  }
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts, out;
  boost::split(parts, text, boost::is_any_of(", \t"));
  for (auto& p : parts)
    if (!p.empty()) out.push_back(p);
  return out;
}

inline double to_number(const std::string& s, const std::string& key) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' is not a number: " + s);
  }
}

inline bool to_bool(const std::string& s, const std::string& key) {
  const auto v = boost::to_lower_copy(s);
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw ConfigError("config: '" + key + "' is not a boolean: " + s);
}

}  // namespace detail

/// Parses the key=value / [section] experiment format.
inline ExperimentConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  ExperimentConfig cfg;
  std::set<std::string> known_sections{"experiment", "problem", "methods", "newton", "reference"};
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError("config: key '" + section + "' outside of a section");
    auto unknown = [&](const std::string& key) {
      throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
    };
    if (section == "experiment") {
      for (const auto& [k, v] : body) {
        const auto val = boost::trim_copy(v.data());
        if (k == "name") cfg.name = val;
        else if (k == "output") cfg.output_dir = val;
        else if (k == "metrics") cfg.metrics = detail::split_list(val);
        else if (k == "species") cfg.species = val == "all" ? -1 : static_cast<int>(detail::to_number(val, k));
        else unknown(k);
      }
    } else if (section == "problem") {
      for (const auto& [k, v] : body) {
        const auto val = boost::trim_copy(v.data());
        if (k == "id") cfg.problem = val;
        else if (k == "t_end") cfg.t_end = detail::to_number(val, k);
        else cfg.params[k] = detail::to_number(val, k);
      }
    } else if (section == "methods") {
      for (const auto& [k, v] : body) {
        const auto val = boost::trim_copy(v.data());
        if (k == "list") cfg.methods = detail::split_list(val);
        else if (k == "steps") {
          cfg.steps.clear();
          for (const auto& s : detail::split_list(val)) cfg.steps.push_back(detail::to_number(s, k));
        } else unknown(k);
      }
    } else if (section == "newton") {
      for (const auto& [k, v] : body) {
        const auto val = boost::trim_copy(v.data());
        if (k == "tol") cfg.newton.tol = detail::to_number(val, k);
        else if (k == "max_iters") cfg.newton.max_iters = static_cast<int>(detail::to_number(val, k));
        else if (k == "fd_epsilon") cfg.newton.fd_epsilon = detail::to_number(val, k);
        else if (k == "jacobian_reuse") cfg.newton.jacobian_reuse = detail::to_bool(val, k);
        else if (k == "jacobian") {
          if (val == "analytic") cfg.newton.jacobian_mode = JacobianMode::analytic;
          else if (val == "fd" || val == "finite_difference") cfg.newton.jacobian_mode = JacobianMode::finite_difference;
          else throw ConfigError("config: jacobian must be analytic or fd");
        } else unknown(k);
      }
    } else if (section == "reference") {
      for (const auto& [k, v] : body) {
        const auto val = boost::trim_copy(v.data());
        if (k == "abstol") cfg.reference.abstol = detail::to_number(val, k);
        else if (k == "reltol") cfg.reference.reltol = detail::to_number(val, k);
        else if (k == "cache") cfg.cache_dir = val == "off" ? "" : val;
        else if (k == "stiff_level") cfg.reference.stiff_level = static_cast<int>(detail::to_number(val, k));
        else unknown(k);
      }
    } else if (boost::starts_with(section, "sensor.")) {
      const std::string method = section.substr(7);
      SensorConfig sc;
      bool have_criteria = false;
      for (const auto& [k, v] : body) {
        const auto val = boost::trim_copy(v.data());
        if (k == "scope") {
          if (val == "global") sc.scope = SensorScope::global;
          else if (val == "local") sc.scope = SensorScope::local;
          else throw ConfigError("config: sensor scope must be global or local");
        } else if (k == "criteria") {
          sc.criteria = parse_criteria(val);
          have_criteria = true;
        } else unknown(k);
      }
      if (!have_criteria) throw ConfigError("config: [" + section + "] needs criteria");
      cfg.sensors[method] = sc;
    } else if (!known_sections.count(section)) {
      throw ConfigError("config: unknown section [" + section + "]");
    }
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  return parse_config(in);
}

// ---------------------------------------------------------------------------------------------
// Tables

struct TableCell {
  enum class Status { ok, inf, fail };
  Status status = Status::ok;
  double value = 0.0;

  static TableCell of(double v) {
    if (std::isinf(v) || std::isnan(v)) return {Status::inf, v};
    return {Status::ok, v};
  }
  static TableCell failed() { return {Status::fail, std::numeric_limits<double>::quiet_NaN()}; }

  bool finite() const { return status == Status::ok; }

  std::string text() const {
    if (status == Status::fail) return "fail";
    if (status == Status::inf) return "inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.8f", value);
    return buf;
  }
};

struct Annotation {
  std::string description;
  bool pass = false;
};

struct TableArtifact {
  std::string name;
  std::string problem;
  std::vector<double> steps;
  std::vector<std::string> methods;
  std::vector<std::string> metrics;
  /// cells[metric][step index][method index]
  std::map<std::string, std::vector<std::vector<TableCell>>> cells;
  std::vector<std::string> failures;
  std::vector<Annotation> annotations;
  std::string config_hash;
  std::string tool_version = kToolVersion;

  const TableCell& cell(const std::string& metric, double h, const std::string& method) const {
    const auto it = cells.find(metric);
    if (it == cells.end()) throw DomainError("table has no metric '" + metric + "'");
    for (size_t i = 0; i < steps.size(); ++i)
      if (std::abs(steps[i] - h) <= 1e-12)
        for (size_t j = 0; j < methods.size(); ++j)
          if (methods[j] == method) return it->second[i][j];
    throw DomainError("table has no cell (" + std::to_string(h) + ", " + method + ")");
  }

  bool all_annotations_pass() const {
    return std::all_of(annotations.begin(), annotations.end(), [](const Annotation& a) { return a.pass; });
  }
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string canonical_text(const ExperimentConfig& c) {
  std::ostringstream os;
  os << std::setprecision(17) << "problem=" << c.problem;
  for (const auto& [k, v] : c.params) os << ';' << k << '=' << v;
  os << ";t_end=" << (c.t_end ? *c.t_end : -1.0) << ";methods=";
  for (const auto& m : c.methods) os << m << ',';
  os << ";steps=";
  for (double h : c.steps) os << h << ',';
  for (const auto& [m, s] : c.sensors) {
    os << ";sensor." << m << '=' << (s.scope == SensorScope::global ? 'g' : 'l');
    for (const auto& cr : s.criteria) os << '[' << cr.functional << "<=" << cr.bound.value_or("") << ']';
  }
  os << ";newton=" << c.newton.tol << ',' << c.newton.max_iters << ','
     << static_cast<int>(c.newton.jacobian_mode) << ',' << c.newton.fd_epsilon << ','
     << c.newton.jacobian_reuse << ";metrics=";
  for (const auto& m : c.metrics) os << m << ',';
  os << ";species=" << c.species << ";ref=" << c.reference.abstol << ',' << c.reference.reltol;
  return os.str();
}

inline void write_vector(std::ostream& out, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? " " : "") << v(i);
  out << '\n';
}

inline void save_trajectory(const std::string& path, const Trajectory& tr) {
  std::ofstream out(path);
  out << std::setprecision(17) << tr.t.size() << ' ' << (tr.u.empty() ? 0 : tr.u.front().size()) << '\n';
  for (size_t n = 0; n < tr.t.size(); ++n) {
    out << tr.t[n] << '\n';
    write_vector(out, tr.u[n]);
    write_vector(out, tr.f[n]);
  }
}

inline std::optional<Trajectory> load_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  size_t n = 0;
  Eigen::Index m = 0;
  if (!(in >> n >> m)) return std::nullopt;
  Trajectory tr;
  for (size_t k = 0; k < n; ++k) {
    double t;
    Vector u(m), f(m);
    if (!(in >> t)) return std::nullopt;
    for (Eigen::Index i = 0; i < m; ++i)
      if (!(in >> u(i))) return std::nullopt;
    for (Eigen::Index i = 0; i < m; ++i)
      if (!(in >> f(i))) return std::nullopt;
    tr.t.push_back(t);
    tr.u.push_back(std::move(u));
    tr.f.push_back(std::move(f));
  }
  return tr;
}

/// Reference run sampled like a method run with step h.
inline RunRecord sample_reference(const Trajectory& tr, const IvpProblem& prob, double h, double T) {
  RunRecord rec;
  rec.method_id = "reference";
  rec.problem_id = prob.name;
  rec.h = h;
  rec.species = prob.species;
  const long N = step_count(T, h);
  for (long n = 0; n <= N; ++n) {
    const double t = static_cast<double>(n) * h;
    rec.times.push_back(t);
    rec.states.push_back(tr.at(t));
  }
  return rec;
}

inline double max_over_species(const RunRecord& run, int species,
                               const std::function<double(int)>& metric) {
  if (species >= 0) return metric(species);
  double v = 0.0;
  for (int s = 0; s < run.species; ++s) v = std::max(v, metric(s));
  return v;
}

}  // namespace detail

inline std::string config_hash(const ExperimentConfig& cfg) {
  return detail::hex64(detail::fnv1a(detail::canonical_text(cfg)));
}

/// Reference trajectory covering every sample instant of every step size, cached on disk when
/// cfg.cache_dir is set.
inline Trajectory cached_reference(const ExperimentConfig& cfg, const IvpProblem& prob, double T) {
  std::vector<double> stops;
  for (double h : cfg.steps) {
    const long N = step_count(T, h);
    for (long n = 1; n <= N; ++n) stops.push_back(static_cast<double>(n) * h);
  }
  std::sort(stops.begin(), stops.end());
  const double t_last = stops.back();
  std::ostringstream key;
  key << std::setprecision(17) << prob.name;
  for (const auto& [k, v] : prob.params) key << ';' << k << '=' << v;
  key << ";T=" << t_last << ";tol=" << cfg.reference.abstol << ',' << cfg.reference.reltol
      << ";stiff=" << prob.stiff << ',' << cfg.reference.stiff_level << ";stops=";
  for (double s : stops) key << s << ',';
  std::string path;
  if (!cfg.cache_dir.empty()) {
    std::filesystem::create_directories(cfg.cache_dir);
    path = (std::filesystem::path(cfg.cache_dir) /
            ("ref_" + prob.name + "_" + detail::hex64(detail::fnv1a(key.str())) + ".txt"))
               .string();
    if (auto tr = detail::load_trajectory(path)) return *tr;
  }
  Trajectory tr = reference_solve(prob, prob.initial, 0.0, t_last, cfg.reference, stops);
  if (!path.empty()) detail::save_trajectory(path, tr);
  return tr;
}

/// Runs every (method, h) cell and fills one table per metric. Step failures become "fail" cells.
inline TableArtifact run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr) {
  cfg.validate();
  const IvpProblem prob = make_problem(cfg.problem, cfg.params);
  const double T = cfg.t_end.value_or(prob.t_end);
  if (cfg.species >= prob.species) throw ConfigError("config: species index out of range");

  TableArtifact tab;
  tab.name = cfg.name;
  tab.problem = cfg.problem;
  tab.methods = cfg.methods;
  tab.metrics = cfg.metrics;
  tab.steps = cfg.steps;
  std::sort(tab.steps.begin(), tab.steps.end());
  tab.config_hash = config_hash(cfg);
  for (const auto& m : cfg.metrics)
    tab.cells[m] = std::vector<std::vector<TableCell>>(tab.steps.size(),
                                                       std::vector<TableCell>(tab.methods.size()));

  const bool needs_ref = std::any_of(cfg.metrics.begin(), cfg.metrics.end(), [](const std::string& m) {
    return m == "err_linf_time" || m == "err_linf_space_T";
  });
  std::optional<Trajectory> ref;
  if (needs_ref) ref = cached_reference(cfg, prob, T);

  const Eigen::Index block = prob.block_size();
  for (size_t i = 0; i < tab.steps.size(); ++i) {
    const double h = tab.steps[i];
    std::optional<RunRecord> ref_run;
    if (ref) ref_run = detail::sample_reference(*ref, prob, h, T);
    for (size_t j = 0; j < tab.methods.size(); ++j) {
      const auto& method = tab.methods[j];
      MethodOptions opt;
      opt.newton = cfg.newton;
      opt.reference = cfg.reference;
      if (auto it = cfg.sensors.find(method); it != cfg.sensors.end())
        opt.sensor = it->second.resolve(prob.initial, block, prob.species > 1 ? std::max(cfg.species, 0) : -1);
      std::optional<RunRecord> run;
      try {
        run = integrate(method, prob, prob.initial, h, T, {}, opt);
      } catch (const Error& e) {
        tab.failures.push_back(method + " h=" + TableCell::of(h).text() + ": " + e.what());
        if (log) *log << "fail: " << tab.failures.back() << '\n';
      }
      for (const auto& metric : cfg.metrics) {
        TableCell& cell = tab.cells[metric][i][j];
        if (!run) {
          cell = TableCell::failed();
          continue;
        }
        const RunRecord& r = *run;
        if (metric == "tv_linf_time") {
          cell = TableCell::of(detail::max_over_species(r, cfg.species, [&](int s) { return tv_linf_time(r, s); }));
        } else if (metric == "err_linf_time") {
          cell = r.blew_up ? TableCell::of(std::numeric_limits<double>::infinity())
                           : TableCell::of(detail::max_over_species(
                                 r, cfg.species, [&](int s) { return linf_time_error(r, *ref_run, s); }));
        } else if (metric == "err_linf_space_T") {
          cell = r.blew_up ? TableCell::of(std::numeric_limits<double>::infinity())
                           : TableCell::of(detail::max_over_species(
                                 r, cfg.species, [&](int s) { return linf_space_error_at_T(r, *ref_run, s); }));
        } else if (metric == "invariant_drift") {
          cell = prob.invariants ? TableCell::of(check_linear_invariants(r, prob)) : TableCell::failed();
        } else if (metric == "rhs_evals") {
          cell = TableCell::of(static_cast<double>(r.stats.rhs_evals));
        } else if (metric == "newton_iters") {
          cell = TableCell::of(static_cast<double>(r.stats.newton_iters));
        } else if (metric == "wall_ms") {
          cell = TableCell::of(r.wall_ms);
        }
      }
      if (log && run)
        *log << method << " h=" << TableCell::of(h).text() << " done (" << run->stats.rhs_evals
             << " rhs evals)\n";
    }
  }
  return tab;
}

/// One CSV per metric: header "h,<methods...>", rows by ascending h.
inline void write_metric_csv(std::ostream& out, const TableArtifact& tab, const std::string& metric) {
  out << "h";
  for (const auto& m : tab.methods) out << ',' << m;
  out << '\n';
  const auto& grid = tab.cells.at(metric);
  for (size_t i = 0; i < tab.steps.size(); ++i) {
    out << TableCell::of(tab.steps[i]).text();
    for (size_t j = 0; j < tab.methods.size(); ++j) out << ',' << grid[i][j].text();
    out << '\n';
  }
}

/// Combined long-format table: "h,method,<metrics...>", rows by ascending h then method order.
inline void write_combined_csv(std::ostream& out, const TableArtifact& tab) {
  out << "h,method";
  for (const auto& m : tab.metrics) out << ',' << m;
  out << '\n';
  for (size_t i = 0; i < tab.steps.size(); ++i)
    for (size_t j = 0; j < tab.methods.size(); ++j) {
      out << TableCell::of(tab.steps[i]).text() << ',' << tab.methods[j];
      for (const auto& m : tab.metrics) out << ',' << tab.cells.at(m)[i][j].text();
      out << '\n';
    }
}

inline void write_annotations_csv(std::ostream& out, const TableArtifact& tab) {
  out << "check,result\n";
  for (const auto& a : tab.annotations) {
    std::string d = a.description;
    std::replace(d.begin(), d.end(), ',', ';');
    out << d << ',' << (a.pass ? "pass" : "fail") << '\n';
  }
}

/// '#' comment lines placed above the CSV header.
inline void write_provenance(std::ostream& out, const TableArtifact& tab) {
  out << "# table=" << tab.name << " problem=" << tab.problem << '\n'
      << "# config_hash=" << tab.config_hash << " tool_version=" << tab.tool_version << '\n';
}

/// Writes <name>_<metric>.csv, <name>_table.csv, <name>_annotations.csv and
/// <name>_failures.txt (when non-empty) into dir. Returns the written paths.
inline std::vector<std::string> write_artifact(const TableArtifact& tab, const std::string& dir) {
  const std::filesystem::path base = dir.empty() ? std::filesystem::path(".") : std::filesystem::path(dir);
  std::filesystem::create_directories(base);
  std::vector<std::string> paths;
  auto open = [&](const std::string& file) {
    paths.push_back((base / file).string());
    std::ofstream f(paths.back(), std::ios::binary);
    if (!f) throw ConfigError("cannot write " + paths.back());
    write_provenance(f, tab);
    return f;
  };
  for (const auto& m : tab.metrics) {
    auto f = open(tab.name + "_" + m + ".csv");
    write_metric_csv(f, tab, m);
  }
  {
    auto f = open(tab.name + "_table.csv");
    write_combined_csv(f, tab);
  }
  if (!tab.annotations.empty()) {
    auto f = open(tab.name + "_annotations.csv");
    write_annotations_csv(f, tab);
  }
  if (!tab.failures.empty()) {
    auto f = open(tab.name + "_failures.txt");
    for (const auto& fail : tab.failures) f << fail << '\n';
  }
  return paths;
}

// ---------------------------------------------------------------------------------------------
// Canonical tables

inline const std::vector<std::string>& table_names() {
  static const std::vector<std::string> names{"tv_advection", "tv_adr", "tv_burgers",
                                              "tv_buckley_leverett"};
  return names;
}

/// The step h = (1 + sqrt 2) dx at which the TR-BDF2 probe reaches Courant number one.
inline double advection_critical_step(double dx = 0.01) { return trbdf2_family_radius(kTrbdf2Gamma) * dx; }

inline ExperimentConfig canonical_config(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  c.metrics = {"tv_linf_time"};
  c.species = 0;
  auto sensor = [](SensorScope scope, std::vector<SensorCriterionText> crit) {
    return SensorConfig{scope, std::move(crit)};
  };
  if (name == "tv_advection") {
    c.problem = "advection";
    c.methods = {"ie", "cn", "trbdf2_clip", "sdirk22", "ros2", "trbdf2_blend", "trbdf2_part"};
    c.steps = {0.0025, 0.005, 0.01, 0.02, advection_critical_step(), 0.04, 0.06, 0.1};
    c.sensors["trbdf2_blend"] = sensor(SensorScope::global, {{"floor chi=0", "0"}});
    c.sensors["trbdf2_part"] = sensor(SensorScope::local, {{"floor chi=0", std::nullopt}, {"ceil psi=1", std::nullopt}});
  } else if (name == "tv_adr") {
    c.problem = "adr";
    c.methods = {"ie", "cn", "trbdf2_clip", "sdirk22", "ros2", "trbdf2_blend", "trbdf2_part"};
    c.steps = {0.0025, 0.005, 0.01, 0.025, 0.05, 0.1};
    c.newton.tol = 1e-8;
    c.sensors["trbdf2_blend"] = sensor(SensorScope::global, {{"floor chi=0", "0"}});
    c.sensors["trbdf2_part"] = sensor(SensorScope::local, {{"floor chi=0", std::nullopt}});
  } else if (name == "tv_burgers") {
    c.problem = "burgers";
    c.methods = {"ie", "cn", "trbdf2_clip", "ee", "sdirk22", "trbdf2_blend", "trbdf2_part"};
    c.steps = {0.0025, 0.005, 0.01, 0.02, 0.04, 0.06, 0.1};
    c.sensors["trbdf2_blend"] = sensor(SensorScope::global, {{"tv", "1"}});
    c.sensors["trbdf2_part"] = sensor(SensorScope::local, {{"floor chi=0.25", std::nullopt}, {"ceil psi=0.75", std::nullopt}});
  } else if (name == "tv_buckley_leverett") {
    c.problem = "buckley_leverett";
    c.methods = {"ie", "cn", "trbdf2_clip", "ee", "sdirk22", "trbdf2_blend", "trbdf2_part"};
    c.steps = {0.001, 0.0025, 0.005, 0.0075, 0.01, 0.015, 0.025};
    c.sensors["trbdf2_blend"] = sensor(SensorScope::global, {{"tv", "1"}});
    c.sensors["trbdf2_part"] = sensor(SensorScope::local, {{"floor chi=0", std::nullopt}, {"ceil psi=0.5", std::nullopt}});
  } else {
    throw ConfigError("unknown table '" + name + "'");
  }
  return c;
}

/// Published TV values the canonical tables are annotated against.
struct ExpectedColumn {
  std::string method;
  std::vector<double> values;  // aligned with the canonical step list
};

inline std::vector<ExpectedColumn> expected_columns(const std::string& name) {
  if (name == "tv_advection")
    return {{"cn", {2, 2, 2, 2, 2.37516991, 3.33333333, 4.06243821, 5.21857423}},
            {"trbdf2_clip", {2, 2, 2, 2, 2, 2.27858017, 2.39070772, 2.47739160}},
            {"sdirk22", {2, 2, 2, 2, 2, 2, 2.768, 3.73260435}},
            {"ros2", {2.00877086, 2.02925347, 2.07630970, 2.14215613, 2.14775690, 2.12378933, 2.07354078, 2.01991743}},
            {"trbdf2_part", {2, 2, 2, 2, 2, 2, 2.00114309, 2}}};
  if (name == "tv_adr")
    return {{"cn", {19.96, 19.96, 19.96, 19.96, 19.96, 21.26167041}},
            {"ros2", {19.96178624, 19.96634023, 19.97806568, 20.01749991, 20.07270798, 20.11087432}}};
  const double inf = std::numeric_limits<double>::infinity();
  if (name == "tv_burgers")
    return {{"cn", {1, 1, 1, 1.06702208, 1.36710392, 1.33460354, 1.20438152}},
            {"trbdf2_clip", {1, 1, 1, 1, 1.10154954, 1.18618300, 1.17675243}},
            {"ee", {1, 1, 3.47978819, inf, inf, inf, inf}},
            {"sdirk22", {1, 1, 1, 1, 1.02205723, 1.39639398, 1.85272884}}};
  if (name == "tv_buckley_leverett")
    return {{"cn", {1, 1, 1, 1.27084161, 1.40310073, 8.09702136, 16.39900045}},
            {"trbdf2_clip", {1, 1, 1, 1.04519501, 1.18671375, 1.32271889, 12.48391471}},
            {"ee", {1, 1, 1.87710600, 6.74722895, 21.35210300, 21.10782320, 19.65284356}},
            {"sdirk22", {1, 1, 1, 1, 1, 1.28222058, 1.57372343}}};
  return {};
}

namespace detail {

/// Index of the first step at which a column exceeds its initial TV by more than tol
/// (failed cells count as violations); steps.size() if it never does.
inline size_t onset_index(const TableArtifact& tab, const std::string& method, double tv0, double tol) {
  const auto& grid = tab.cells.at("tv_linf_time");
  const auto j = static_cast<size_t>(std::find(tab.methods.begin(), tab.methods.end(), method) - tab.methods.begin());
  for (size_t i = 0; i < tab.steps.size(); ++i) {
    const auto& c = grid[i][j];
    if (!c.finite() || c.value > tv0 + tol) return i;
  }
  return tab.steps.size();
}

inline size_t expected_onset(const std::vector<double>& col, double tv0, double tol) {
  for (size_t i = 0; i < col.size(); ++i)
    if (!(col[i] <= tv0 + tol)) return i;
  return col.size();
}

inline std::string step_text(const TableArtifact& tab, size_t i) {
  return i < tab.steps.size() ? TableCell::of(tab.steps[i]).text() : std::string("never");
}

inline bool column_all(const TableArtifact& tab, const std::string& method,
                       const std::function<bool(size_t, const TableCell&)>& pred) {
  const auto& grid = tab.cells.at("tv_linf_time");
  const auto j = static_cast<size_t>(std::find(tab.methods.begin(), tab.methods.end(), method) - tab.methods.begin());
  if (j >= tab.methods.size()) return false;
  for (size_t i = 0; i < tab.steps.size(); ++i)
    if (!pred(i, grid[i][j])) return false;
  return true;
}

}  // namespace detail

/// Attaches pass/fail checks for a canonical table.
inline void annotate_table(TableArtifact& tab) {
  using detail::column_all;
  auto add = [&](std::string d, bool pass) { tab.annotations.push_back({std::move(d), pass}); };
  auto near = [](double tol, double target) {
    return [=](size_t, const TableCell& c) { return c.finite() && std::abs(c.value - target) <= tol; };
  };
  const auto expected = expected_columns(tab.name);
  auto col = [&](const std::string& m) -> const std::vector<double>& {
    for (const auto& e : expected)
      if (e.method == m) return e.values;
    throw DomainError("no expected column for " + m);
  };
  const double tv_eps = 1e-9;

  if (tab.name == "tv_advection") {
    const double tv0 = 2.0;
    add("ie column equals 2 within 1e-9 at every h", column_all(tab, "ie", near(1e-9, tv0)));
    add("trbdf2_blend column equals 2 within 1e-9 at every h", column_all(tab, "trbdf2_blend", near(1e-9, tv0)));
    const size_t crit = 4;
    const size_t on_cn = detail::onset_index(tab, "cn", tv0, tv_eps);
    add("cn first violates TVD at h=" + detail::step_text(tab, crit) + " (observed " + detail::step_text(tab, on_cn) + ")",
        on_cn == crit);
    add("cn at h=" + detail::step_text(tab, crit) + " equals 2.37516991 within 1e-3",
        column_all(tab, "cn", [&](size_t i, const TableCell& c) {
          return i != crit || (c.finite() && std::abs(c.value - 2.37516991) <= 1e-3);
        }));
    const size_t on_clip = detail::onset_index(tab, "trbdf2_clip", tv0, tv_eps);
    add("trbdf2_clip TVD for h <= " + detail::step_text(tab, crit) + " (first violation " + detail::step_text(tab, on_clip) + ")",
        on_clip == crit + 1);
    add("trbdf2_clip at h=0.04 equals 2.27858017 within 1e-2",
        column_all(tab, "trbdf2_clip", [&](size_t i, const TableCell& c) {
          return i != 5 || (c.finite() && std::abs(c.value - 2.27858017) <= 1e-2);
        }));
    const size_t on_sd = detail::onset_index(tab, "sdirk22", tv0, tv_eps);
    add("sdirk22 TVD for h <= 0.04 (first violation " + detail::step_text(tab, on_sd) + ")", on_sd == 6);
    add("sdirk22 at h=0.06 equals 2.768 within 2e-2", column_all(tab, "sdirk22", [&](size_t i, const TableCell& c) {
          return i != 6 || (c.finite() && std::abs(c.value - 2.768) <= 2e-2);
        }));
    add("trbdf2_part at most 2.0021 at h=0.06 and 2 within 1e-9 elsewhere",
        column_all(tab, "trbdf2_part", [&](size_t i, const TableCell& c) {
          if (!c.finite()) return false;
          return i == 6 ? c.value <= 2.0021 : std::abs(c.value - tv0) <= 1e-9;
        }));
    const auto& ros = col("ros2");
    add("ros2 within 2e-3 of the published column", column_all(tab, "ros2", [&](size_t i, const TableCell& c) {
          return c.finite() && std::abs(c.value - ros[i]) <= 2e-3;
        }));
  } else if (tab.name == "tv_adr") {
    const double tv0 = 19.96;
    for (const auto& m : tab.methods) {
      if (m == "ros2") continue;
      add(m + " column equals 19.96 within 1e-6" + (m == "cn" ? std::string(" except h=0.1") : ""),
          column_all(tab, m, [&](size_t i, const TableCell& c) {
            if (m == "cn" && i + 1 == tab.steps.size()) return true;
            return c.finite() && std::abs(c.value - tv0) <= 1e-6;
          }));
    }
    add("cn at h=0.1 equals 21.2617 within 0.1", column_all(tab, "cn", [&](size_t i, const TableCell& c) {
          return i + 1 != tab.steps.size() || (c.finite() && std::abs(c.value - 21.2617) <= 0.1);
        }));
    const auto& ros = col("ros2");
    add("ros2 exceeds 19.96 at every h", column_all(tab, "ros2", [&](size_t, const TableCell& c) {
          return c.finite() && c.value > tv0;
        }));
    add("ros2 within 5e-2 of the published column", column_all(tab, "ros2", [&](size_t i, const TableCell& c) {
          return c.finite() && std::abs(c.value - ros[i]) <= 5e-2;
        }));
  } else if (tab.name == "tv_burgers" || tab.name == "tv_buckley_leverett") {
    const double tv0 = 1.0;
    const size_t never = tab.steps.size();
    add("ie never violates TVD", detail::onset_index(tab, "ie", tv0, tv_eps) == never);
    add("trbdf2_blend equals 1 within 1e-9 at every h", column_all(tab, "trbdf2_blend", near(1e-9, tv0)));
    const size_t on_cn = detail::onset_index(tab, "cn", tv0, tv_eps);
    const size_t on_clip = detail::onset_index(tab, "trbdf2_clip", tv0, tv_eps);
    const size_t on_sd = detail::onset_index(tab, "sdirk22", tv0, tv_eps);
    add("cn violates TVD no later than trbdf2_clip and sdirk22", on_cn <= on_clip && on_cn <= on_sd && on_cn < never);
    // Published values equal to 1 up to 1e-8 are read as TVD.
    const double pub_eps = 2e-8;
    for (const auto& m : {"cn", "trbdf2_clip", "sdirk22"}) {
      const size_t want = detail::expected_onset(col(m), tv0, pub_eps);
      const size_t got = detail::onset_index(tab, m, tv0, tv_eps);
      add(std::string(m) + " onset at h=" + detail::step_text(tab, got) + " (published " +
              detail::step_text(tab, want) + ")",
          got == want);
    }
    const double ee_from = tab.name == "tv_burgers" ? 0.02 : 0.0075;
    add("ee reaches inf for h >= " + TableCell::of(ee_from).text(),
        column_all(tab, "ee", [&](size_t i, const TableCell& c) {
          return tab.steps[i] < ee_from - 1e-12 || c.status == TableCell::Status::inf;
        }));
    add("trbdf2_part at most 1.05 at every h", column_all(tab, "trbdf2_part", [&](size_t, const TableCell& c) {
          return c.finite() && c.value <= 1.05;
        }));
  }
}

inline TableArtifact reproduce_table(const std::string& name, std::ostream* log = nullptr) {
  const ExperimentConfig cfg = canonical_config(name);
  TableArtifact tab = run_experiment(cfg, log);
  annotate_table(tab);
  return tab;
}

// ---------------------------------------------------------------------------------------------
// Introspection

inline std::string method_label(const std::string& id) {
  if (id == "trbdf2_clip") return "TR-BDF2, negative values clipped after each step";
  if (id == "trbdf2_blend") return "TR-BDF2 blended (global sensor, IE-IE fallback)";
  if (id == "trbdf2_part") return "TR-BDF2 partitioned (local sensor, explicit Euler probe at h/R)";
  if (id == "mprk2") return "modified Patankar RK, second order";
  if (id == "reference") return "adaptive Dormand-Prince 5(4) with Hermite dense output";
  if (id == "ros2") return "ROS2 Rosenbrock";
  return method_tableau(id).label;
}

inline std::string list_methods() {
  std::ostringstream os;
  for (const auto& id : method_ids()) os << std::left << std::setw(14) << id << method_label(id) << '\n';
  return os.str();
}

inline std::string describe_method(const std::string& id) {
  if (!is_method(id)) throw UnknownMethod("unknown method '" + id + "'");
  std::ostringstream os;
  os << id << ": " << method_label(id) << '\n';
  if (id == "mprk2") {
    os << "linearly implicit, unconditionally positive, conserves sum(u); no Butcher tableau\n";
    return os.str();
  }
  if (id == "reference") {
    os << "explicit adaptive pair of orders 5 and 4; not a fixed-step method\n";
    return os.str();
  }
  os << std::setprecision(12);
  if (id == "ros2") {
    const auto r = ros2_tableau();
    os << "gamma = " << r.gamma_diag << "\nalpha =\n" << r.alpha << "\nGamma =\n" << r.gamma_mat
       << "\nb = " << r.b.transpose() << '\n';
  }
  const ButcherTableau tab = method_tableau(id);
  if (id == "ros2") os << "linear-equivalent RK tableau:\n";
  os << "A =\n" << tab.A << "\nb = " << tab.b.transpose() << "\nc = " << tab.c.transpose() << '\n';
  os << "order = " << tab.order << ", stage order = " << tab.stage_order << '\n';
  const ButcherTableau pruned = prune_unused_stages(tab);
  os << "R(A,b) = " << radius_abs_monotonicity(pruned);
  if (pruned.stages() != tab.stages()) os << " (unused stages removed)";
  os << '\n';
  double phi_inf = 0.0;
  try {
    phi_inf = std::abs(id == "ros2" ? stability_function(ros2_tableau(), {-1e6, 0.0})
                                    : stability_function(tab, std::complex<double>(-1e6, 0.0)));
  } catch (const SingularResolvent&) {
    phi_inf = std::numeric_limits<double>::infinity();
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", phi_inf);
  os << "|phi(-1e6)| = " << buf << (phi_inf <= 1e-5 ? " (L-stable)" : " (not L-stable)") << '\n';
  return os.str();
}

}  // namespace ssp
