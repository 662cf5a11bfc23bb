#include "mslab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mslab/exceptions.hpp"

namespace mslab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::optional<double> to_double(const std::string& s) {
  double v = 0.0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec == std::errc() && p == end) return v;
  // a/b fractions such as 1/100
  const auto slash = s.find('/');
  if (slash == std::string::npos) return std::nullopt;
  const auto num = to_double(trim(s.substr(0, slash)));
  const auto den = to_double(trim(s.substr(slash + 1)));
  if (!num || !den || *den == 0.0) return std::nullopt;
  return *num / *den;
}

std::optional<long long> to_integer(const std::string& s) {
  long long v = 0;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec == std::errc() && p == end) return v;
  return std::nullopt;
}

std::optional<bool> to_bool(const std::string& s) {
  if (s == "true" || s == "yes" || s == "1") return true;
  if (s == "false" || s == "no" || s == "0") return false;
  return std::nullopt;
}

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"run", {"name", "budget_s", "full_scale"}},
      {"problem", {"source"}},
      {"coefficient",
       {"kind", "epsilon", "value", "profile", "variance", "correlation", "correlation_x", "correlation_y", "nx", "ny",
        "seed", "file", "regions"}},
      {"mesh", {"NH", "nh", "href", "layers", "n_sub", "sigma_os", "absorb_contrast", "quadrature"}},
      {"methods", {"list"}},
      {"penalty", {"beta", "gamma0", "gamma1", "rho"}},
      {"solver", {"rtol", "max_iterations", "preconditioner"}},
      {"output", {"csv"}},
      {"expect", {"tolerance"}},
      {"homog", {"resolution"}},
  };
  return keys;
}

/// Typed access that records failures instead of throwing.
class Reader {
 public:
  explicit Reader(const KeyValueFile& kv) : kv_(kv) {}

  std::vector<std::string>& errors() { return errors_; }
  void fail(const std::string& key, const std::string& msg) { errors_.push_back(where(key) + msg); }
  bool has(const std::string& key) const { return kv_.entries.count(key) != 0; }
  const std::string* raw(const std::string& key) const {
    const auto it = kv_.entries.find(key);
    return it == kv_.entries.end() ? nullptr : &it->second.value;
  }

  void text(const std::string& key, std::string& out) {
    if (const auto* s = raw(key)) out = *s;
  }
  void real(const std::string& key, double& out) {
    if (const auto* s = raw(key)) {
      if (const auto v = to_double(*s)) out = *v;
      else fail(key, "not a number: '" + *s + "'");
    }
  }
  template <typename Int>
  void integer(const std::string& key, Int& out) {
    if (const auto* s = raw(key)) {
      if (const auto v = to_integer(*s)) out = static_cast<Int>(*v);
      else fail(key, "not an integer: '" + *s + "'");
    }
  }
  void boolean(const std::string& key, bool& out) {
    if (const auto* s = raw(key)) {
      if (const auto v = to_bool(*s)) out = *v;
      else fail(key, "not a boolean: '" + *s + "'");
    }
  }

  std::string where(const std::string& key) const {
    const auto it = kv_.entries.find(key);
    std::string s = key;
    if (it != kv_.entries.end()) s += " (line " + std::to_string(it->second.line) + ")";
    return s + ": ";
  }

 private:
  const KeyValueFile& kv_;
  std::vector<std::string> errors_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& s) {
  const std::filesystem::path p(s);
  return p.is_absolute() ? p : base / p;
}

void read_coefficient(Reader& r, const std::filesystem::path& base, CoefficientSpec& c) {
  std::string kind = "periodic";
  r.text("coefficient.kind", kind);
  if (kind == "periodic") c.kind = CoefficientSpec::Kind::Periodic;
  else if (kind == "constant") c.kind = CoefficientSpec::Kind::Constant;
  else if (kind == "layered") c.kind = CoefficientSpec::Kind::Layered;
  else if (kind == "lognormal") c.kind = CoefficientSpec::Kind::Lognormal;
  else if (kind == "raster") c.kind = CoefficientSpec::Kind::Raster;
  else r.fail("coefficient.kind", "unknown kind '" + kind + "'");

  r.real("coefficient.epsilon", c.epsilon);
  r.real("coefficient.value", c.value);
  std::string profile = "sine-x1";
  r.text("coefficient.profile", profile);
  if (profile == "sine-x1") c.profile = LayerProfile::SineX1;
  else if (profile == "sine-x2") c.profile = LayerProfile::SineX2;
  else r.fail("coefficient.profile", "unknown profile '" + profile + "'");

  auto& ln = c.lognormal;
  r.real("coefficient.variance", ln.variance);
  if (r.has("coefficient.correlation")) {
    r.real("coefficient.correlation", ln.correlation_x);
    ln.correlation_y = ln.correlation_x;
  }
  r.real("coefficient.correlation_x", ln.correlation_x);
  r.real("coefficient.correlation_y", ln.correlation_y);
  r.integer("coefficient.nx", ln.nx);
  r.integer("coefficient.ny", ln.ny);
  r.integer("coefficient.seed", ln.seed);

  const bool analytic = c.kind == CoefficientSpec::Kind::Periodic || c.kind == CoefficientSpec::Kind::Layered;
  if (analytic && !(c.epsilon > 0)) r.fail("coefficient.epsilon", "must be positive for kind '" + kind + "'");
  if (c.kind == CoefficientSpec::Kind::Constant && !(c.value > 0)) r.fail("coefficient.value", "must be positive");
  if (c.kind == CoefficientSpec::Kind::Lognormal) {
    if (!(ln.variance >= 0)) r.fail("coefficient.variance", "must be nonnegative");
    if (!(ln.correlation_x > 0) || !(ln.correlation_y > 0)) r.fail("coefficient.correlation", "must be positive");
    if (ln.nx < 1 || ln.ny < 1) r.fail("coefficient.nx", "grid must be at least 1 x 1");
  }

  if (const auto* f = r.raw("coefficient.file")) {
    c.raster_file = resolve(base, *f);
    if (!std::filesystem::exists(c.raster_file)) r.fail("coefficient.file", "missing file " + c.raster_file.string());
  } else if (c.kind == CoefficientSpec::Kind::Raster) {
    r.fail("coefficient.file", "required for kind 'raster'");
  }
  if (const auto* f = r.raw("coefficient.regions")) {
    c.regions_file = resolve(base, *f);
    if (!std::filesystem::exists(c.regions_file)) r.fail("coefficient.regions", "missing file " + c.regions_file.string());
  }
}

void read_expectations(Reader& r, const KeyValueFile& kv, ExperimentConfig& cfg) {
  double default_tol = 0.25;
  if (const auto* s = r.raw("expect.tolerance")) {
    std::string t = trim(*s);
    const bool pct = !t.empty() && t.back() == '%';
    if (pct) t.pop_back();
    if (const auto v = to_double(trim(t)); v && *v >= 0) default_tol = pct ? *v / 100.0 : *v;
    else r.fail("expect.tolerance", "not a tolerance: '" + *s + "'");
  }
  for (const auto& key : kv.order) {
    if (key.rfind("expect.", 0) != 0 || key == "expect.tolerance") continue;
    const std::string sel = key.substr(7);
    const auto dot = sel.rfind('.');
    Expectation e;
    e.key = sel;
    e.tolerance = default_tol;
    if (dot == std::string::npos) {
      r.fail(key, "expected <method>[/qualifier:value].<column>");
      continue;
    }
    e.column = sel.substr(dot + 1);
    if (e.column != "rel_l2" && e.column != "rel_linf" && e.column != "rel_energy") {
      r.fail(key, "unknown column '" + e.column + "'");
    }
    std::istringstream parts(sel.substr(0, dot));
    std::string part;
    std::getline(parts, e.method, '/');
    if (!parse_method(e.method)) r.fail(key, "unknown method '" + e.method + "'");
    while (std::getline(parts, part, '/')) {
      const auto eq = part.find(':');
      const std::string q = part.substr(0, eq), v = eq == std::string::npos ? "" : part.substr(eq + 1);
      if (q == "rho" && v == "epsilon") e.rho = RhoMode::Epsilon;
      else if (q == "rho" && v == "h") e.rho = RhoMode::FineH;
      else if (q == "NH" && to_integer(v)) e.coarse_cells = static_cast<int>(*to_integer(v));
      else r.fail(key, "unknown qualifier '" + part + "'");
    }
    std::istringstream vs(kv.entries.at(key).value);
    std::string value, word, tol;
    vs >> value >> word >> tol;
    const auto v = to_double(value);
    if (!v) r.fail(key, "not a number: '" + value + "'");
    else e.expected = *v;
    if (!word.empty()) {
      const bool pct = !tol.empty() && tol.back() == '%';
      if (pct) tol.pop_back();
      const auto t = to_double(tol);
      if (word != "tol" || !t || *t < 0) r.fail(key, "expected '<value> tol <t>[%]'");
      else e.tolerance = pct ? *t / 100.0 : *t;
    }
    cfg.expect.push_back(e);
  }
}

int cells_from_spacing(Reader& r, const std::string& key, int fallback) {
  double h = 1.0 / fallback;
  r.real(key, h);
  if (!(h > 0)) {
    r.fail(key, "must be positive");
    return fallback;
  }
  const double n = 1.0 / h;
  if (std::abs(n - std::round(n)) > 1e-9 * n) {
    r.fail(key, "1/" + key.substr(key.find('.') + 1) + " must be an integer");
    return fallback;
  }
  return static_cast<int>(std::lround(n));
}

}  // namespace

KeyValueFile KeyValueFile::parse(std::istream& is) {
  KeyValueFile kv;
  std::string line, section;
  int n = 0;
  std::vector<std::string> bad;
  while (std::getline(is, line)) {
    ++n;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", n);
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", n);
    const std::string key = (section.empty() ? "" : section + ".") + trim(line.substr(0, eq));
    if (kv.entries.count(key)) throw ParseError("duplicate key " + key, n);
    kv.entries[key] = {trim(line.substr(eq + 1)), n};
    kv.order.push_back(key);
  }
  return kv;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return parse(in);
}

ProblemConfig ExperimentConfig::problem(int coarse) const {
  ProblemConfig p;
  p.coarse_cells = coarse;
  p.fine_cells = fine_cells;
  p.reference_cells = reference_cells;
  p.layers = layers;
  p.n_sub = n_sub;
  p.oversampling_scale = oversampling_scale;
  p.channel_contrast = absorb_contrast;
  p.quadrature = quadrature;
  p.solver = solver;
  return p;
}

PenaltyParams ExperimentConfig::penalty(const RhoChoice& r) const {
  PenaltyParams p;
  p.beta = beta;
  p.gamma0 = gamma0;
  p.gamma1 = gamma1;
  p.rho_mode = r.mode;
  p.rho_value = r.value;
  return p;
}

std::optional<double> ExperimentConfig::epsilon() const {
  using K = CoefficientSpec::Kind;
  if (coefficient.kind == K::Periodic || coefficient.kind == K::Layered) return coefficient.epsilon;
  return std::nullopt;
}

ExperimentConfig parse_config(std::istream& is, const std::filesystem::path& base_dir) {
  const KeyValueFile kv = KeyValueFile::parse(is);
  Reader r(kv);
  ExperimentConfig cfg;

  for (const auto& key : kv.order) {
    const auto dot = key.find('.');
    const std::string section = dot == std::string::npos ? "" : key.substr(0, dot);
    const std::string name = dot == std::string::npos ? key : key.substr(dot + 1);
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) r.fail(key, "unknown section '" + section + "'");
    else if (section != "expect" && !it->second.count(name)) r.fail(key, "unknown key");
  }

  r.text("run.name", cfg.name);
  r.real("run.budget_s", cfg.budget_seconds);
  r.boolean("run.full_scale", cfg.full_scale);
  r.real("problem.source", cfg.source);
  read_coefficient(r, base_dir, cfg.coefficient);

  if (const auto* s = r.raw("mesh.NH")) {
    cfg.coarse_cells.clear();
    for (const auto& item : split_list(*s)) {
      if (const auto v = to_integer(item); v && *v > 0) cfg.coarse_cells.push_back(static_cast<int>(*v));
      else r.fail("mesh.NH", "not a positive integer: '" + item + "'");
    }
    if (cfg.coarse_cells.empty()) r.fail("mesh.NH", "empty list");
  }
  r.integer("mesh.nh", cfg.fine_cells);
  cfg.reference_cells = cells_from_spacing(r, "mesh.href", cfg.reference_cells);
  r.integer("mesh.layers", cfg.layers);
  r.integer("mesh.n_sub", cfg.n_sub);
  r.real("mesh.sigma_os", cfg.oversampling_scale);
  r.real("mesh.absorb_contrast", cfg.absorb_contrast);
  if (const auto* s = r.raw("mesh.quadrature")) {
    if (*s == "edge-midpoint") cfg.quadrature = QuadratureRule::EdgeMidpoint;
    else if (*s == "centroid") cfg.quadrature = QuadratureRule::Centroid;
    else r.fail("mesh.quadrature", "expected edge-midpoint or centroid");
  }

  if (const auto* s = r.raw("methods.list")) {
    for (const auto& item : split_list(*s)) {
      if (const auto m = parse_method(item)) cfg.methods.push_back(*m);
      else r.fail("methods.list", "unknown method '" + item + "'");
    }
  }
  if (cfg.methods.empty() && !r.has("methods.list")) r.fail("methods.list", "missing");
  else if (cfg.methods.empty()) r.fail("methods.list", "empty method list");

  r.real("penalty.beta", cfg.beta);
  r.real("penalty.gamma0", cfg.gamma0);
  r.real("penalty.gamma1", cfg.gamma1);
  if (cfg.beta != 1.0 && cfg.beta != 0.0 && cfg.beta != -1.0) r.fail("penalty.beta", "must be -1, 0 or 1");
  if (!(cfg.gamma0 > 0)) r.fail("penalty.gamma0", "must be positive");
  if (!(cfg.gamma1 >= 0)) r.fail("penalty.gamma1", "must be nonnegative");
  if (const auto* s = r.raw("penalty.rho")) {
    cfg.rho.clear();
    for (const auto& item : split_list(*s)) {
      if (item == "epsilon") cfg.rho.push_back({RhoMode::Epsilon, 0.0});
      else if (item == "h") cfg.rho.push_back({RhoMode::FineH, 0.0});
      else if (const auto v = to_double(item); v && *v > 0) cfg.rho.push_back({RhoMode::Explicit, *v});
      else r.fail("penalty.rho", "expected epsilon, h or a positive length: '" + item + "'");
    }
    if (cfg.rho.empty()) r.fail("penalty.rho", "empty list");
  }
  for (const auto& rho : cfg.rho) {
    if (rho.mode == RhoMode::Epsilon && !cfg.epsilon()) {
      r.fail("penalty.rho", "rho = epsilon needs a coefficient with an oscillation scale");
    }
  }

  r.real("solver.rtol", cfg.solver.rtol);
  r.integer("solver.max_iterations", cfg.solver.max_iterations);
  if (const auto* s = r.raw("solver.preconditioner")) {
    if (*s == "none") cfg.solver.preconditioner = Preconditioner::None;
    else if (*s == "jacobi") cfg.solver.preconditioner = Preconditioner::Jacobi;
    else if (*s == "ic") cfg.solver.preconditioner = Preconditioner::IncompleteCholesky;
    else if (*s == "ilu") cfg.solver.preconditioner = Preconditioner::IncompleteLU;
    else r.fail("solver.preconditioner", "expected none, jacobi, ic or ilu");
  }
  if (!(cfg.solver.rtol > 0)) r.fail("solver.rtol", "must be positive");

  if (const auto* s = r.raw("output.csv")) cfg.csv = resolve(base_dir, *s);
  r.integer("homog.resolution", cfg.homog_resolution);
  if (cfg.homog_resolution < 16) r.fail("homog.resolution", "must be at least 16");
  read_expectations(r, kv, cfg);

  const bool coupled = std::find(cfg.methods.begin(), cfg.methods.end(), Method::FEMsFEM) != cfg.methods.end();
  for (int nh : cfg.coarse_cells) {
    for (auto& v : config_violations(cfg.problem(nh))) {
      const auto colon = v.find(':');
      const std::string key = v.substr(0, colon);
      const std::string msg = trim(v.substr(colon + 1));
      r.fail(key, cfg.coarse_cells.size() > 1 ? "(NH = " + std::to_string(nh) + ") " + msg : msg);
    }
    if (coupled && cfg.n_sub > 0 && nh > 0 && cfg.n_sub * nh != cfg.fine_cells) {
      r.fail("mesh.n_sub", "FE-MsFEM needs n_sub = nh / NH so that interface nodes match");
    }
  }

  if (!r.errors().empty()) throw ConfigError(r.errors());
  return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config " + path.string()});
  ExperimentConfig cfg = parse_config(in, path.parent_path());
  cfg.path = path;
  if (cfg.name.empty()) cfg.name = path.stem().string();
  return cfg;
}

CoefficientField build_field(const CoefficientSpec& spec) {
  using K = CoefficientSpec::Kind;
  std::optional<CoefficientField> field;
  switch (spec.kind) {
    case K::Periodic: field = CoefficientField::periodic_paper(spec.epsilon); break;
    case K::Constant: field = CoefficientField::constant(spec.value); break;
    case K::Layered: field = CoefficientField::layered(spec.profile, spec.epsilon); break;
    case K::Lognormal: field = CoefficientField::raster(generate_lognormal(spec.lognormal)); break;
    case K::Raster: field = CoefficientField::raster(load_raster(spec.raster_file)); break;
  }
  auto regions = spec.inline_regions;
  if (!spec.regions_file.empty()) {
    auto more = load_regions(spec.regions_file);
    regions.insert(regions.end(), more.begin(), more.end());
  }
  if (!regions.empty()) return CoefficientField::overlay(*field, std::move(regions));
  return *field;
}

LognormalSpec parse_lognormal_spec(const std::filesystem::path& path) {
  const KeyValueFile kv = KeyValueFile::load(path);
  LognormalSpec s;
  std::vector<std::string> bad;
  for (const auto& key : kv.order) {
    const std::string name = key.rfind("lognormal.", 0) == 0 ? key.substr(10) : key;
    const std::string& value = kv.entries.at(key).value;
    const auto real = to_double(value);
    const auto integer = to_integer(value);
    const std::string where = key + " (line " + std::to_string(kv.entries.at(key).line) + "): ";
    if (name == "variance" && real) s.variance = *real;
    else if (name == "correlation" && real) s.correlation_x = s.correlation_y = *real;
    else if (name == "correlation_x" && real) s.correlation_x = *real;
    else if (name == "correlation_y" && real) s.correlation_y = *real;
    else if (name == "nx" && integer) s.nx = static_cast<int>(*integer);
    else if (name == "ny" && integer) s.ny = static_cast<int>(*integer);
    else if (name == "seed" && integer && *integer >= 0) s.seed = static_cast<std::uint64_t>(*integer);
    else bad.push_back(where + "unknown key or bad value '" + value + "'");
  }
  if (!(s.correlation_x > 0) || !(s.correlation_y > 0)) bad.push_back("correlation: must be positive");
  if (s.nx < 1 || s.ny < 1) bad.push_back("nx, ny: must be positive");
  if (!bad.empty()) throw ConfigError(bad);
  return s;
}

}  // namespace mslab
