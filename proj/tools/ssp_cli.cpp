#include <cmath>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ssp/experiment.hpp"

namespace {

int print_table(const ssp::TableArtifact& tab, const std::string& out_dir) {
  for (const auto& m : tab.metrics) {
    std::cout << "# " << tab.name << " " << m << "\n";
    ssp::write_metric_csv(std::cout, tab, m);
  }
  for (const auto& a : tab.annotations) std::cout << (a.pass ? "PASS " : "FAIL ") << a.description << "\n";
  if (!out_dir.empty())
    for (const auto& p : ssp::write_artifact(tab, out_dir)) std::cerr << "wrote " << p << "\n";
  return tab.all_annotations_pass() ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monotone one-step integrators: experiments, tables and method introspection"};
  app.require_subcommand(1);

  std::string config_path, out_dir, table_name, method_id;
  bool verbose = false;

  auto* run = app.add_subcommand("run", "run an experiment config and write CSV tables");
  run->add_option("config", config_path, "config file")->required();
  run->add_option("-o,--output", out_dir, "output directory (overrides the config)");
  run->add_flag("-v,--verbose", verbose, "log every finished cell");

  auto* table = app.add_subcommand("table", "reproduce one of the canonical TV tables");
  table->add_option("name", table_name, "tv_advection | tv_adr | tv_burgers | tv_buckley_leverett")->required();
  table->add_option("-o,--output", out_dir, "also write CSV files here");
  table->add_flag("-v,--verbose", verbose, "log every finished cell");

  app.add_subcommand("methods", "list method identifiers");

  auto* describe = app.add_subcommand("describe", "tableau, order, radius and L-stability of a method");
  describe->add_option("id", method_id, "method id")->required();

  std::string grid_id = "trbdf2";
  double re_lo = -6, re_hi = 2, im_lo = -4, im_hi = 4;
  int n_re = 161, n_im = 161;
  auto* grid = app.add_subcommand("grid", "sample |phi(z)| on a rectangle as CSV");
  grid->add_option("id", grid_id, "method id")->required();
  grid->add_option("--re-min", re_lo, "real axis lower bound")->capture_default_str();
  grid->add_option("--re-max", re_hi, "real axis upper bound")->capture_default_str();
  grid->add_option("--im-min", im_lo, "imaginary axis lower bound")->capture_default_str();
  grid->add_option("--im-max", im_hi, "imaginary axis upper bound")->capture_default_str();
  grid->add_option("--n-re", n_re, "samples along the real axis")->capture_default_str();
  grid->add_option("--n-im", n_im, "samples along the imaginary axis")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    std::ostream* log = verbose ? &std::cerr : nullptr;
    if (*run) {
      auto cfg = ssp::load_config(config_path);
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      const auto tab = ssp::run_experiment(cfg, log);
      return print_table(tab, cfg.output_dir.empty() ? "." : cfg.output_dir);
    }
    if (*table) {
      const auto tab = ssp::reproduce_table(table_name, log);
      return print_table(tab, out_dir);
    }
    if (app.got_subcommand("methods")) {
      std::cout << ssp::list_methods();
      return 0;
    }
    if (*describe) {
      std::cout << ssp::describe_method(method_id);
      return 0;
    }
    if (*grid) {
      if (!ssp::is_method(grid_id) || grid_id == "mprk2" || grid_id == "reference")
        throw ssp::ConfigError("no stability function for '" + grid_id + "'");
      ssp::ComplexEvaluator phi;
      if (grid_id == "trbdf2_part") {
        phi = [](std::complex<double> z) { return ssp::trbdf2_ark_stability(z.real(), z.imag()); };
      } else {
        const auto tab = ssp::method_tableau(grid_id);
        phi = [tab](std::complex<double> z) { return ssp::stability_function(tab, z); };
      }
      ssp::write_grid_csv(std::cout, ssp::stability_region_grid(phi, {re_lo, re_hi}, {im_lo, im_hi}, n_re, n_im));
      return 0;
    }
  } catch (const ssp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ssp::UnknownMethod& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
