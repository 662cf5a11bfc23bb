#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mslab/coeff.hpp"
#include "mslab/coupling.hpp"

namespace mslab {

/// Raw `[section]` / `key = value` text. Keys are stored as "section.key";
/// '#' starts a comment, blank lines are ignored.
struct KeyValueFile {
  struct Entry {
    std::string value;
    int line = 0;
  };
  std::map<std::string, Entry> entries;
  std::vector<std::string> order;

  static KeyValueFile parse(std::istream& is);
  static KeyValueFile load(const std::filesystem::path& path);
};

struct CoefficientSpec {
  enum class Kind { Periodic, Constant, Layered, Lognormal, Raster };
  Kind kind = Kind::Periodic;
  double epsilon = 0.0;  // periodic, layered
  double value = 1.0;    // constant
  LayerProfile profile = LayerProfile::SineX1;
  LognormalSpec lognormal;
  std::filesystem::path raster_file;
  std::filesystem::path regions_file;  // optional overlay
  std::vector<OverlayRegion> inline_regions;
};

/// FE-MsFEM penalty length choice; one CSV row per entry.
struct RhoChoice {
  RhoMode mode = RhoMode::Epsilon;
  double value = 0.0;
};

/// `method[/qualifier:value...].column = expected [tol t[%]]`, qualifiers
/// rho:epsilon, rho:h and NH:<cells>.
struct Expectation {
  std::string key;
  std::string method;
  std::optional<RhoMode> rho;
  std::optional<int> coarse_cells;
  std::string column;  // rel_l2, rel_linf or rel_energy
  double expected = 0.0;
  double tolerance = 0.25;  // relative
};

struct ExperimentConfig {
  std::filesystem::path path;
  std::string name;
  double budget_seconds = 0.0;  // 0: none declared
  bool full_scale = false;      // refused without --full-scale
  double source = 1.0;          // constant f
  CoefficientSpec coefficient;
  std::vector<int> coarse_cells{8};
  int fine_cells = 256;
  int reference_cells = 512;
  int layers = 2;
  int n_sub = 0;
  double oversampling_scale = 3.0;
  double absorb_contrast = 100.0;
  QuadratureRule quadrature = QuadratureRule::EdgeMidpoint;
  std::vector<Method> methods;
  double beta = 1.0;
  double gamma0 = 20.0;
  double gamma1 = 0.1;
  std::vector<RhoChoice> rho{{RhoMode::Epsilon, 0.0}};
  SolveOptions solver{1e-10, 0, Preconditioner::IncompleteCholesky};
  std::filesystem::path csv;  // empty: stdout only
  std::vector<Expectation> expect;
  int homog_resolution = 256;

  /// Mesh parameters for one entry of the coarse sweep.
  ProblemConfig problem(int coarse) const;
  PenaltyParams penalty(const RhoChoice& rho) const;
  std::optional<double> epsilon() const;
};

/// Parses and validates; throws ConfigError listing every violation with its
/// key path. Relative file paths resolve against the config's directory.
ExperimentConfig parse_config(const std::filesystem::path& path);
ExperimentConfig parse_config(std::istream& is, const std::filesystem::path& base_dir);

/// Builds the coefficient, generating or loading rasters as needed.
CoefficientField build_field(const CoefficientSpec& spec);

/// Log-normal generator parameters from a key-value file (keys variance,
/// correlation_x, correlation_y, nx, ny, seed; optionally under [lognormal]).
LognormalSpec parse_lognormal_spec(const std::filesystem::path& path);

}  // namespace mslab
