#include "mslab/coeff.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include "mslab/exceptions.hpp"

namespace mslab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double layer_value(LayerProfile p, const Point& y) {
  switch (p) {
    case LayerProfile::SineX1: return 2.0 + 1.8 * std::sin(kTwoPi * y.x());
    case LayerProfile::SineX2: return 2.0 + 1.8 * std::sin(kTwoPi * y.y());
  }
  return 1.0;
}

const char* profile_name(LayerProfile p) { return p == LayerProfile::SineX1 ? "sine_x1" : "sine_x2"; }

std::string fingerprint(const std::vector<double>& v) {
  std::uint64_t h = 1469598103934665603ull;
  for (double d : v) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    h = (h ^ bits) * 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

}  // namespace

double periodic_paper_cell(const Point& y) {
  const double s1 = std::sin(kTwoPi * y.x()), s2 = std::sin(kTwoPi * y.y()), c2 = std::cos(kTwoPi * y.y());
  return (2.0 + 1.8 * s1) / (2.0 + 1.8 * c2) + (2.0 + 1.8 * s2) / (2.0 + 1.8 * s1);
}

double RasterField::eval(const Point& p) const {
  const int i = std::clamp(static_cast<int>(std::floor(p.x() * nx)), 0, nx - 1);
  const int j = std::clamp(static_cast<int>(std::floor(p.y() * ny)), 0, ny - 1);
  return at(i, j);
}

CoefficientField::CoefficientField(Variant v) : v_(std::move(v)) {}

CoefficientField CoefficientField::periodic_paper(double epsilon) {
  if (!(epsilon > 0)) throw std::invalid_argument("periodic coefficient needs epsilon > 0");
  return CoefficientField(PeriodicPaper{epsilon});
}

CoefficientField CoefficientField::constant(double value) {
  if (!(value > 0)) throw std::invalid_argument("constant coefficient must be positive");
  return CoefficientField(Constant{value});
}

CoefficientField CoefficientField::raster(RasterField grid) {
  if (grid.nx < 1 || grid.ny < 1 || static_cast<int>(grid.values.size()) != grid.nx * grid.ny) {
    throw std::invalid_argument("raster dimensions do not match its values");
  }
  for (double v : grid.values)
    if (!(v > 0)) throw std::invalid_argument("non-positive coefficient in raster");
  return CoefficientField(Raster{std::make_shared<const RasterField>(std::move(grid))});
}

CoefficientField CoefficientField::layered(LayerProfile profile, double epsilon) {
  if (!(epsilon > 0)) throw std::invalid_argument("layered coefficient needs epsilon > 0");
  return CoefficientField(LayeredAnalytic{profile, epsilon});
}

CoefficientField CoefficientField::overlay(CoefficientField base, std::vector<OverlayRegion> regions) {
  for (const auto& r : regions)
    if (!(r.value > 0)) throw std::invalid_argument("non-positive overlay value");
  return CoefficientField(Overlay{std::make_shared<const CoefficientField>(std::move(base)), std::move(regions)});
}

double CoefficientField::operator()(const Point& x) const {
  return std::visit(overloaded{
                        [&](const PeriodicPaper& p) { return periodic_paper_cell(x / p.epsilon); },
                        [&](const Constant& c) { return c.value; },
                        [&](const Raster& r) { return r.grid->eval(x); },
                        [&](const LayeredAnalytic& l) { return layer_value(l.profile, x / l.epsilon); },
                        [&](const Overlay& o) {
                          for (auto it = o.regions.rbegin(); it != o.regions.rend(); ++it)
                            if (it->rect.contains(x)) return it->value;
                          return (*o.base)(x);
                        },
                    },
                    v_);
}

Bounds CoefficientField::bounds() const {
  return std::visit(overloaded{
                        [](const PeriodicPaper&) {
                          // term-wise extremes: 0.2/3.8 <= each ratio <= 3.8/0.2
                          return Bounds{2 * 0.2 / 3.8, 2 * 3.8 / 0.2};
                        },
                        [](const Constant& c) { return Bounds{c.value, c.value}; },
                        [](const Raster& r) {
                          const auto [lo, hi] = std::minmax_element(r.grid->values.begin(), r.grid->values.end());
                          return Bounds{*lo, *hi};
                        },
                        [](const LayeredAnalytic&) { return Bounds{2.0 - 1.8, 2.0 + 1.8}; },
                        [](const Overlay& o) {
                          Bounds b = o.base->bounds();
                          for (const auto& r : o.regions) {
                            b.lower = std::min(b.lower, r.value);
                            b.upper = std::max(b.upper, r.value);
                          }
                          return b;
                        },
                    },
                    v_);
}

std::optional<double> CoefficientField::epsilon() const {
  return std::visit(overloaded{
                        [](const PeriodicPaper& p) -> std::optional<double> { return p.epsilon; },
                        [](const LayeredAnalytic& l) -> std::optional<double> { return l.epsilon; },
                        [](const Overlay& o) { return o.base->epsilon(); },
                        [](const auto&) -> std::optional<double> { return std::nullopt; },
                    },
                    v_);
}

std::optional<std::function<double(const Point&)>> CoefficientField::unit_cell() const {
  using Fn = std::function<double(const Point&)>;
  return std::visit(overloaded{
                        [](const PeriodicPaper&) -> std::optional<Fn> { return Fn(periodic_paper_cell); },
                        [](const LayeredAnalytic& l) -> std::optional<Fn> {
                          const LayerProfile p = l.profile;
                          return Fn([p](const Point& y) { return layer_value(p, y); });
                        },
                        [](const Constant& c) -> std::optional<Fn> {
                          const double v = c.value;
                          return Fn([v](const Point&) { return v; });
                        },
                        [](const auto&) -> std::optional<Fn> { return std::nullopt; },
                    },
                    v_);
}

std::vector<Rect> CoefficientField::high_contrast_regions(double contrast) const {
  std::vector<Rect> out;
  if (const auto* o = std::get_if<Overlay>(&v_)) {
    const Bounds b = o->base->bounds();
    for (const auto& r : o->regions) {
      if (std::max(r.value / b.upper, b.lower / r.value) > contrast) out.push_back(r.rect);
    }
  }
  return out;
}

std::string CoefficientField::describe() const {
  std::ostringstream os;
  os << std::setprecision(17);
  std::visit(overloaded{
                 [&](const PeriodicPaper& p) { os << "periodic(eps=" << p.epsilon << ")"; },
                 [&](const Constant& c) { os << "constant(" << c.value << ")"; },
                 [&](const Raster& r) {
                   os << "raster(" << r.grid->nx << "x" << r.grid->ny << "," << fingerprint(r.grid->values) << ")";
                 },
                 [&](const LayeredAnalytic& l) {
                   os << "layered(" << profile_name(l.profile) << ",eps=" << l.epsilon << ")";
                 },
                 [&](const Overlay& o) {
                   std::vector<double> flat;
                   for (const auto& r : o.regions) flat.insert(flat.end(), {r.rect.x0, r.rect.y0, r.rect.x1, r.rect.y1, r.value});
                   os << "overlay(" << o.base->describe() << "," << o.regions.size() << "," << fingerprint(flat) << ")";
                 },
             },
             v_);
  return os.str();
}

// ---------------------------------------------------------------------------
// Log-normal generator

RasterField generate_lognormal(const LognormalSpec& spec) {
  if (!(spec.variance >= 0)) throw std::invalid_argument("log-normal variance must be nonnegative");
  if (!(spec.correlation_x > 0) || !(spec.correlation_y > 0)) {
    throw std::invalid_argument("correlation lengths must be positive");
  }
  if (spec.nx < 1 || spec.ny < 1) throw std::invalid_argument("log-normal grid must be at least 1x1");
  const double dx = 1.0 / spec.nx, dy = 1.0 / spec.ny;
  if (spec.correlation_x < dx / 2 || spec.correlation_y < dy / 2) {
    throw std::invalid_argument("resolution error: averaging ellipse is smaller than one grid cell");
  }
  const int nx = spec.nx, ny = spec.ny;
  const size_t n = static_cast<size_t>(nx) * ny;

  std::mt19937_64 rng(spec.seed);
  auto uniform = [&rng] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
  std::vector<double> noise(n);
  for (size_t k = 0; k < n; k += 2) {
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double theta = kTwoPi * uniform();
    noise[k] = r * std::cos(theta);
    if (k + 1 < n) noise[k + 1] = r * std::sin(theta);
  }

  // row-wise prefix sums make each ellipse row an O(1) range sum
  std::vector<double> prefix(static_cast<size_t>(nx + 1) * ny, 0.0);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      prefix[j * (nx + 1) + i + 1] = prefix[j * (nx + 1) + i] + noise[static_cast<size_t>(j) * nx + i];

  const int reach_y = static_cast<int>(std::floor(spec.correlation_y / dy));
  std::vector<int> half_width(2 * reach_y + 1);
  for (int dj = -reach_y; dj <= reach_y; ++dj) {
    const double ry = dj * dy / spec.correlation_y;
    const double w = std::sqrt(std::max(0.0, 1.0 - ry * ry)) * spec.correlation_x / dx;
    half_width[dj + reach_y] = static_cast<int>(std::floor(w + 1e-12));
  }

  std::vector<double> smooth(n);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      double sum = 0.0;
      long count = 0;
      for (int dj = -reach_y; dj <= reach_y; ++dj) {
        const int jj = j + dj;
        if (jj < 0 || jj >= ny) continue;
        const int w = half_width[dj + reach_y];
        const int lo = std::max(0, i - w), hi = std::min(nx - 1, i + w);
        sum += prefix[jj * (nx + 1) + hi + 1] - prefix[jj * (nx + 1) + lo];
        count += hi - lo + 1;
      }
      smooth[static_cast<size_t>(j) * nx + i] = sum / static_cast<double>(count);
    }
  }

  double mean = 0.0;
  for (double v : smooth) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : smooth) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double scale = var > 0 ? std::sqrt(spec.variance / var) : 0.0;

  RasterField out{nx, ny, std::vector<double>(n)};
  for (size_t k = 0; k < n; ++k) out.values[k] = std::exp((smooth[k] - mean) * scale);
  return out;
}

// ---------------------------------------------------------------------------
// File formats

namespace {

double parse_number(const std::string& tok, int line) {
  double v = 0;
  const auto* first = tok.data();
  const auto* last = tok.data() + tok.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) throw ParseError("malformed number '" + tok + "'", line);
  return v;
}

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string t;
  while (ss >> t) out.push_back(t);
  return out;
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

}  // namespace

RasterField parse_raster(std::istream& is) {
  std::string line;
  int lineno = 0;
  RasterField f;
  while (std::getline(is, line)) {
    ++lineno;
    if (!blank(line)) break;
  }
  const auto head = tokens(line);
  if (head.size() != 3 || head[0] != "raster") throw ParseError("malformed header, expected `raster nx ny`", lineno);
  f.nx = static_cast<int>(parse_number(head[1], lineno));
  f.ny = static_cast<int>(parse_number(head[2], lineno));
  if (f.nx < 1 || f.ny < 1 || std::to_string(f.nx) != head[1] || std::to_string(f.ny) != head[2]) {
    throw ParseError("malformed header, raster dimensions must be positive integers", lineno);
  }
  f.values.reserve(static_cast<size_t>(f.nx) * f.ny);
  int rows = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (blank(line)) continue;
    const auto tok = tokens(line);
    if (rows >= f.ny) throw ParseError("dimension mismatch: more than " + std::to_string(f.ny) + " rows", lineno);
    if (static_cast<int>(tok.size()) != f.nx) {
      throw ParseError("dimension mismatch: expected " + std::to_string(f.nx) + " values, found " +
                           std::to_string(tok.size()),
                       lineno);
    }
    for (const auto& t : tok) {
      const double v = parse_number(t, lineno);
      if (!(v > 0)) throw ParseError("non-positive coefficient " + t, lineno);
      f.values.push_back(v);
    }
    ++rows;
  }
  if (rows != f.ny) {
    throw ParseError("dimension mismatch: expected " + std::to_string(f.ny) + " rows, found " + std::to_string(rows),
                     lineno);
  }
  return f;
}

void write_raster(std::ostream& os, const RasterField& field) {
  os << "raster " << field.nx << ' ' << field.ny << '\n';
  char buf[32];
  for (int j = 0; j < field.ny; ++j) {
    for (int i = 0; i < field.nx; ++i) {
      const auto res = std::to_chars(buf, buf + sizeof buf, field.at(i, j));
      if (i) os << ' ';
      os.write(buf, res.ptr - buf);
    }
    os << '\n';
  }
}

RasterField load_raster(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open raster file " + path.string(), 0);
  return parse_raster(in);
}

void save_raster(const RasterField& field, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write raster file " + path.string());
  write_raster(out, field);
}

std::vector<OverlayRegion> parse_regions(std::istream& is) {
  std::vector<OverlayRegion> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (blank(line)) continue;
    const auto tok = tokens(line);
    if (tok.size() != 6 || tok[0] != "rect") throw ParseError("expected `rect x0 y0 x1 y1 value`", lineno);
    OverlayRegion r;
    r.rect = {parse_number(tok[1], lineno), parse_number(tok[2], lineno), parse_number(tok[3], lineno),
              parse_number(tok[4], lineno)};
    r.value = parse_number(tok[5], lineno);
    if (r.rect.x1 < r.rect.x0 || r.rect.y1 < r.rect.y0) throw ParseError("rectangle corners out of order", lineno);
    if (!(r.value > 0)) throw ParseError("non-positive coefficient " + tok[5], lineno);
    out.push_back(r);
  }
  return out;
}

std::vector<OverlayRegion> load_regions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open region file " + path.string(), 0);
  return parse_regions(in);
}

}  // namespace mslab
