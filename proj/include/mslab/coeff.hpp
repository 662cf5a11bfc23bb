#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mslab/mesh.hpp"

namespace mslab {

/// Closed axis-aligned rectangle [x0, x1] x [y0, y1].
struct Rect {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  bool contains(const Point& p) const { return p.x() >= x0 && p.x() <= x1 && p.y() >= y0 && p.y() <= y1; }
  /// Positive-area overlap with another rectangle.
  bool overlaps(const Rect& r) const { return x0 < r.x1 && r.x0 < x1 && y0 < r.y1 && r.y0 < y1; }
};

/// Cell-centred positive values on an nx-by-ny grid over the unit square.
/// Row 0 is the bottom row.
struct RasterField {
  int nx = 0;
  int ny = 0;
  std::vector<double> values;  // values[j * nx + i]

  double at(int i, int j) const { return values[static_cast<size_t>(j) * nx + i]; }
  /// Nearest-cell (piecewise constant) evaluation.
  double eval(const Point& p) const;
};

struct OverlayRegion {
  Rect rect;
  double value = 1.0;
};

/// Lower and upper bounds of a coefficient.
struct Bounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// Layered profiles a(y) depending on one coordinate only.
enum class LayerProfile {
  SineX1,  // 2 + 1.8 sin(2 pi y1)
  SineX2,  // 2 + 1.8 sin(2 pi y2)
};

/// Scalar diffusion coefficient a^eps(x); the tensor is a^eps * I.
class CoefficientField {
 public:
  struct PeriodicPaper {
    double epsilon;
  };
  struct Constant {
    double value;
  };
  struct Raster {
    std::shared_ptr<const RasterField> grid;
  };
  struct LayeredAnalytic {
    LayerProfile profile;
    double epsilon;
  };
  struct Overlay {
    std::shared_ptr<const CoefficientField> base;
    std::vector<OverlayRegion> regions;
  };
  using Variant = std::variant<PeriodicPaper, Constant, Raster, LayeredAnalytic, Overlay>;

  CoefficientField(Variant v);  // NOLINT(google-explicit-constructor)

  static CoefficientField periodic_paper(double epsilon);
  static CoefficientField constant(double value);
  static CoefficientField raster(RasterField grid);
  static CoefficientField layered(LayerProfile profile, double epsilon);
  static CoefficientField overlay(CoefficientField base, std::vector<OverlayRegion> regions);

  /// a^eps(x); overlay regions are tested in order, the last match wins.
  double operator()(const Point& x) const;
  double eval(const Point& x) const { return (*this)(x); }

  /// (lambda, Lambda): closed form for analytic variants, min/max over the
  /// stored values for rasters and overlays.
  Bounds bounds() const;

  /// Oscillation scale, when the field carries one.
  std::optional<double> epsilon() const;

  /// a(y) on the unit cell Y for fields of the form a(x / eps).
  std::optional<std::function<double(const Point&)>> unit_cell() const;

  /// Overlay regions whose value differs from the base bounds by more than
  /// `contrast` (ratio in either direction).
  std::vector<Rect> high_contrast_regions(double contrast) const;

  /// Short human-readable description, also used as a cache key.
  std::string describe() const;

  const Variant& variant() const { return v_; }

 private:
  Variant v_;
};

/// Closed-form value of the two-scale periodic coefficient at y = x / eps.
double periodic_paper_cell(const Point& y);

struct LognormalSpec {
  double variance = 1.5;       // sigma^2 of log a
  double correlation_x = 0.01; // l1
  double correlation_y = 0.01; // l2
  int nx = 1024;
  int ny = 1024;
  std::uint64_t seed = 1;
};

/// Log-normal field by moving-ellipse averaging of white noise.
///
/// 1. Fill the grid with independent N(0,1) draws: std::mt19937_64 seeded with
///    `seed`, uniforms u = (k + 0.5) / 2^53 from the top 53 bits, Box-Muller
///    pairs (both outputs used, cosine first), row-major from the bottom row.
/// 2. Average each cell over the cells whose centres satisfy
///    (dx/l1)^2 + (dy/l2)^2 <= 1, clipped at the domain boundary.
/// 3. Shift and scale to sample mean 0 and sample variance sigma^2.
/// 4. Exponentiate.
RasterField generate_lognormal(const LognormalSpec& spec);

/// Raster file: `raster nx ny`, then ny lines of nx values, bottom row first.
RasterField load_raster(const std::filesystem::path& path);
void save_raster(const RasterField& field, const std::filesystem::path& path);
RasterField parse_raster(std::istream& is);
void write_raster(std::ostream& os, const RasterField& field);

/// Region file: lines `rect x0 y0 x1 y1 value`; '#' starts a comment.
std::vector<OverlayRegion> load_regions(const std::filesystem::path& path);
std::vector<OverlayRegion> parse_regions(std::istream& is);

}  // namespace mslab
