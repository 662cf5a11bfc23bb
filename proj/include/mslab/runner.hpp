#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "mslab/config.hpp"
#include "mslab/error_norms.hpp"
#include "mslab/exceptions.hpp"

namespace mslab {

/// Frozen CSV column set.
inline constexpr const char* kCsvHeader =
    "method,rel_l2,rel_linf,rel_energy,NH,nh,href,eps,beta,gamma0,gamma1,rho,seed,wall_ms";

struct ResultRow {
  ErrorReport errors;  // carries the metadata columns too
  long long wall_ms = 0;
  std::string config;  // config name, not written to the CSV
};

/// One CSV line without the trailing newline. Reals use %.6e, counts are
/// integers, not-applicable reals print as nan.
std::string format_row(const ResultRow& row);
void write_csv(std::ostream& os, const std::vector<ResultRow>& rows);

struct RunOptions {
  bool full_scale = false;
  std::filesystem::path dump_dir;  // empty: no field dumps
  std::ostream* log = nullptr;     // progress messages
};

/// Thrown when a config marked full_scale runs without the flag.
class FullScaleRequired : public Error {
 public:
  using Error::Error;
};

/// Runs every configured method (and coarse sweep entry) against one shared
/// reference solution. Writes cfg.csv when set.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

struct ExpectationResult {
  std::string config;
  std::string key;
  double measured = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string note;
};

/// Compares each expectation with every matching row; an expectation that
/// matches no row fails.
std::vector<ExpectationResult> check_expectations(const ExperimentConfig& cfg, const std::vector<ResultRow>& rows);

struct SuiteResult {
  std::vector<ResultRow> rows;
  std::vector<ExpectationResult> checks;
  std::vector<std::string> failures;  // configs that did not run
  std::vector<std::string> skipped;   // full-scale configs without the flag
  int exit_code = 0;                  // 0 all good, 1 failures, 2 no usable directory
};

/// Runs every *.cfg in `dir` in name order; failures are collected and the
/// suite continues.
SuiteResult run_suite(const std::filesystem::path& dir, const RunOptions& options = {});

}  // namespace mslab
