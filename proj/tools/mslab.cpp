#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <iostream>

#include "mslab/config.hpp"
#include "mslab/homog.hpp"
#include "mslab/runner.hpp"

using namespace mslab;

namespace {

int cmd_run(const std::string& path, bool full_scale, const std::string& dump_dir) {
  const ExperimentConfig cfg = parse_config(path);
  RunOptions o;
  o.full_scale = full_scale;
  o.dump_dir = dump_dir;
  o.log = &std::cerr;
  const auto rows = run_experiment(cfg, o);
  write_csv(std::cout, rows);
  return 0;
}

int cmd_suite(const std::string& dir, bool full_scale) {
  RunOptions o;
  o.full_scale = full_scale;
  o.log = &std::cerr;
  const SuiteResult s = run_suite(dir, o);
  if (s.exit_code == 2) {
    for (const auto& f : s.failures) std::cerr << "error: " << f << '\n';
    return 2;
  }
  write_csv(std::cout, s.rows);
  for (const auto& name : s.skipped) std::cerr << "SKIP " << name << " (full scale, pass --full-scale)\n";
  for (const auto& c : s.checks) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s %s %s measured=%.6e expected=%.6e tol=%g%%%s%s", c.pass ? "PASS" : "FAIL",
                  c.config.c_str(), c.key.c_str(), c.measured, c.expected, 100.0 * c.tolerance,
                  c.note.empty() ? "" : " ", c.note.c_str());
    std::cerr << buf << '\n';
  }
  for (const auto& f : s.failures) std::cerr << "ERROR " << f << '\n';
  return s.exit_code;
}

int cmd_homog(const std::string& path) {
  const ExperimentConfig cfg = parse_config(path);
  const CoefficientField field = build_field(cfg.coefficient);
  const auto cell_fn = field.unit_cell();
  if (!cell_fn) throw ConfigError({"coefficient.kind: homogenisation needs a periodic or layered field"});
  const CellSolution cell = solve_cell(*cell_fn, cfg.homog_resolution, cfg.quadrature);
  const EffectiveTensor t = effective_tensor(*cell_fn, cell, cfg.quadrature);
  std::printf("%.6e,%.6e\n%.6e,%.6e\n", t.tensor(0, 0), t.tensor(0, 1), t.tensor(1, 0), t.tensor(1, 1));
  std::fprintf(stderr, "resolution %d, asymmetry before symmetrisation %.3e\n", cfg.homog_resolution, t.asymmetry);
  return 0;
}

int cmd_gen_perm(const std::string& spec_path, const std::string& out) {
  const LognormalSpec spec = parse_lognormal_spec(spec_path);
  const RasterField grid = generate_lognormal(spec);
  save_raster(grid, out);
  const auto [lo, hi] = std::minmax_element(grid.values.begin(), grid.values.end());
  std::fprintf(stderr, "%d x %d field, seed %llu, max/min = %.4e\n", grid.nx, grid.ny,
               static_cast<unsigned long long>(spec.seed), *hi / *lo);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiscale elliptic solver suite"};
  app.require_subcommand(1);

  std::string cfg_path, dir, dump_dir, spec_path, out_path;
  bool full_scale = false;

  auto* run = app.add_subcommand("run", "Run one experiment config and print CSV rows");
  run->add_option("config", cfg_path, "Experiment config")->required();
  run->add_flag("--full-scale", full_scale, "Allow paper-scale configs");
  run->add_option("--dump-fields", dump_dir, "Directory for nodal field rasters");

  auto* suite = app.add_subcommand("suite", "Run every .cfg in a directory and check expectations");
  suite->add_option("dir", dir, "Config directory")->required();
  suite->add_flag("--full-scale", full_scale, "Include paper-scale configs");

  auto* homog = app.add_subcommand("homog", "Print the effective tensor of a periodic config");
  homog->add_option("config", cfg_path, "Experiment config")->required();

  auto* gen = app.add_subcommand("gen-perm", "Generate a log-normal raster");
  gen->add_option("spec", spec_path, "Generator parameters")->required();
  gen->add_option("out", out_path, "Output raster")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(cfg_path, full_scale, dump_dir);
    if (*suite) return cmd_suite(dir, full_scale);
    if (*homog) return cmd_homog(cfg_path);
    if (*gen) return cmd_gen_perm(spec_path, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
