#include "mslab/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace mslab {

namespace {

using Clock = std::chrono::steady_clock;

long long elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0).count();
}

std::string real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

void log(const RunOptions& o, const std::string& msg) {
  if (o.log) *o.log << msg << '\n' << std::flush;
}

void dump(const RunOptions& o, const std::string& stem, const LatticeMesh& mesh, const VectorXd& nodal) {
  if (o.dump_dir.empty()) return;
  std::filesystem::create_directories(o.dump_dir);
  RasterField grid;
  grid.nx = grid.ny = mesh.cells_per_side() + 1;
  grid.values.resize(nodal.size());
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) grid.values[static_cast<size_t>(j) * grid.nx + i] = nodal[mesh.node_at(i, j)];
  save_raster(grid, o.dump_dir / (stem + ".raster"));
}

std::string rho_label(const RhoChoice& r) {
  switch (r.mode) {
    case RhoMode::Epsilon: return "eps";
    case RhoMode::FineH: return "h";
    case RhoMode::Explicit: return real(r.value);
  }
  return "";
}

}  // namespace

std::string format_row(const ResultRow& row) {
  const ErrorReport& e = row.errors;
  std::string s = e.method;
  for (double v : {e.rel_l2, e.rel_linf, e.rel_energy}) s += "," + real(v);
  for (int v : {e.coarse_cells, e.fine_cells, e.reference_cells}) s += "," + std::to_string(v);
  for (double v : {e.epsilon, e.beta, e.gamma0, e.gamma1, e.rho}) s += "," + real(v);
  s += "," + std::to_string(e.seed) + "," + std::to_string(row.wall_ms);
  return s;
}

void write_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  os << kCsvHeader << '\n';
  for (const auto& r : rows) os << format_row(r) << '\n';
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  if (cfg.full_scale && !options.full_scale) {
    throw FullScaleRequired(cfg.name + " is a full-scale experiment; pass --full-scale to run it");
  }
  if (cfg.full_scale) {
    log(options, "warning: " + cfg.name + " runs at paper scale (1/href = " + std::to_string(cfg.reference_cells) +
                     "); expect several GB of memory and tens of minutes");
  }
  const CoefficientField field = build_field(cfg.coefficient);
  const double fval = cfg.source;
  const SourceFunction f = [fval](const Point&) { return fval; };

  ErrorReport meta;
  meta.fine_cells = cfg.fine_cells;
  meta.reference_cells = cfg.reference_cells;
  if (const auto eps = cfg.epsilon()) meta.epsilon = *eps;
  meta.beta = cfg.beta;
  meta.gamma0 = cfg.gamma0;
  meta.gamma1 = cfg.gamma1;
  if (cfg.coefficient.kind == CoefficientSpec::Kind::Lognormal) meta.seed = static_cast<long long>(cfg.coefficient.lognormal.seed);

  auto t0 = Clock::now();
  const LatticeMesh reference(cfg.reference_cells);
  const FieldSolution ref = solve_reference(reference, field, f, cfg.problem(cfg.coarse_cells.front()).solver, cfg.quadrature);
  const NormContext ctx(reference, field);
  const ProlongedField uref = prolong(reference, ref.values);
  const long long ref_ms = elapsed_ms(t0);
  log(options, cfg.name + ": reference solved (" + std::to_string(reference.num_nodes()) + " nodes, " +
                   std::to_string(ref_ms) + " ms)");
  dump(options, cfg.name + "_reference", reference, ref.values);

  std::vector<ResultRow> rows;
  auto add = [&](const std::string& method, const ProlongedField& u, int coarse, double rho, long long ms) {
    ResultRow row;
    row.errors = norms(u, uref, ctx);
    const ErrorReport m = meta;
    row.errors.method = method;
    row.errors.coarse_cells = coarse;
    row.errors.fine_cells = m.fine_cells;
    row.errors.reference_cells = m.reference_cells;
    row.errors.epsilon = m.epsilon;
    row.errors.beta = m.beta;
    row.errors.gamma0 = m.gamma0;
    row.errors.gamma1 = m.gamma1;
    row.errors.rho = rho;
    row.errors.seed = m.seed;
    row.wall_ms = ms;
    row.config = cfg.name;
    log(options, "  " + method + " NH=" + std::to_string(coarse) + ": energy " + real(row.errors.rel_energy));
    rows.push_back(std::move(row));
  };

  const auto has = [&](Method m) { return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end(); };
  if (has(Method::Reference)) add("reference", uref, cfg.coarse_cells.front(), std::nan(""), ref_ms);

  for (int coarse : cfg.coarse_cells) {
    MultiscaleProblem problem(field, f, cfg.problem(coarse));
    const std::string tag = cfg.coarse_cells.size() > 1 ? "_NH" + std::to_string(coarse) : "";
    for (Method m : cfg.methods) {
      if (m == Method::Reference) continue;
      if (m == Method::FEMsFEM) {
        for (const auto& choice : cfg.rho) {
          t0 = Clock::now();
          const PenaltyParams params = cfg.penalty(choice);
          const CombinedSolution sol = problem.solve_fe_msfem(params);
          const ProlongedField u = prolong(sol, problem.fine(), problem.coarse(), problem.split(),
                                           problem.omega2_bases(), reference);
          add(to_string(m), u, coarse, sol.rho, elapsed_ms(t0));
          dump(options, cfg.name + "_fe-msfem_rho-" + rho_label(choice) + tag, reference, u.nodal);
        }
        continue;
      }
      t0 = Clock::now();
      const BasisSet bases = m == Method::MsFEMStandard ? problem.standard_bases() : problem.mixed_bases();
      const CoarseSolution sol = problem.solve_msfem(bases);
      const ProlongedField u = prolong(problem.coarse(), bases, sol.coefficients, reference);
      add(to_string(m), u, coarse, std::nan(""), elapsed_ms(t0));
      dump(options, cfg.name + "_" + to_string(m) + tag, reference, u.nodal);
    }
  }

  if (!options.dump_dir.empty()) {
    RasterField a;
    a.nx = a.ny = cfg.reference_cells;
    a.values.resize(static_cast<size_t>(a.nx) * a.ny);
    for (int j = 0; j < a.ny; ++j)
      for (int i = 0; i < a.nx; ++i)
        a.values[static_cast<size_t>(j) * a.nx + i] = field(Point((i + 0.5) / a.nx, (j + 0.5) / a.ny));
    save_raster(a, options.dump_dir / (cfg.name + "_coefficient.raster"));
  }

  if (!cfg.csv.empty()) {
    if (cfg.csv.has_parent_path()) std::filesystem::create_directories(cfg.csv.parent_path());
    std::ofstream out(cfg.csv, std::ios::binary);
    if (!out) throw Error("cannot write " + cfg.csv.string());
    write_csv(out, rows);
  }
  return rows;
}

std::vector<ExpectationResult> check_expectations(const ExperimentConfig& cfg, const std::vector<ResultRow>& rows) {
  std::vector<ExpectationResult> out;
  for (const auto& e : cfg.expect) {
    bool matched = false;
    for (const auto& row : rows) {
      const ErrorReport& r = row.errors;
      if (r.method != e.method) continue;
      if (e.coarse_cells && r.coarse_cells != *e.coarse_cells) continue;
      if (e.rho) {
        const double want = *e.rho == RhoMode::Epsilon ? r.epsilon : 1.0 / r.fine_cells;
        if (!(std::abs(r.rho - want) <= 1e-12 * want)) continue;
      }
      matched = true;
      ExpectationResult x;
      x.config = cfg.name;
      x.key = e.key;
      x.expected = e.expected;
      x.tolerance = e.tolerance;
      x.measured = e.column == "rel_l2" ? r.rel_l2 : e.column == "rel_linf" ? r.rel_linf : r.rel_energy;
      const double scale = std::abs(e.expected);
      x.pass = std::abs(x.measured - e.expected) <= e.tolerance * (scale > 0 ? scale : 1.0);
      out.push_back(x);
    }
    if (!matched) {
      ExpectationResult x;
      x.config = cfg.name;
      x.key = e.key;
      x.expected = e.expected;
      x.tolerance = e.tolerance;
      x.measured = std::nan("");
      x.note = "no matching row";
      out.push_back(x);
    }
  }
  return out;
}

SuiteResult run_suite(const std::filesystem::path& dir, const RunOptions& options) {
  SuiteResult s;
  if (!std::filesystem::is_directory(dir)) {
    s.failures.push_back(dir.string() + ": not a directory");
    s.exit_code = 2;
    return s;
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".cfg") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    s.failures.push_back(dir.string() + ": no .cfg files");
    s.exit_code = 2;
    return s;
  }
  for (const auto& file : files) {
    try {
      const ExperimentConfig cfg = parse_config(file);
      if (cfg.full_scale && !options.full_scale) {
        s.skipped.push_back(cfg.name);
        continue;
      }
      auto rows = run_experiment(cfg, options);
      auto checks = check_expectations(cfg, rows);
      s.rows.insert(s.rows.end(), rows.begin(), rows.end());
      s.checks.insert(s.checks.end(), checks.begin(), checks.end());
    } catch (const std::exception& ex) {
      s.failures.push_back(file.filename().string() + ": " + ex.what());
    }
  }
  const bool bad_check = std::any_of(s.checks.begin(), s.checks.end(), [](const auto& c) { return !c.pass; });
  s.exit_code = (!s.failures.empty() || bad_check) ? 1 : 0;
  return s;
}

}  // namespace mslab
