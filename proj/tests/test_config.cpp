#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mslab/config.hpp"
#include "mslab/runner.hpp"

using namespace mslab;
namespace fs = std::filesystem;

namespace {

ExperimentConfig from_text(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is, fs::temp_directory_path());
}

std::vector<std::string> violations_of(const std::string& text) {
  try {
    from_text(text);
  } catch (const ConfigError& e) {
    return e.violations();
  }
  return {};
}

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

std::string trivial(const std::string& source, const std::string& methods) {
  return "[problem]\nsource = " + source +
         "\n[coefficient]\nkind = constant\nvalue = 1\n"
         "[mesh]\nNH = 8\nnh = 32\nhref = 1/64\nlayers = 2\n"
         "[methods]\nlist = " +
         methods + "\n[penalty]\nrho = h\n";
}

int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// CSV rows with the timing column cleared.
std::vector<std::string> untimed(std::vector<ResultRow> rows) {
  std::vector<std::string> out;
  for (auto& r : rows) {
    r.wall_ms = 0;
    out.push_back(format_row(r));
  }
  return out;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  void write(const std::string& file, const std::string& text) const { std::ofstream(path / file) << text; }
};

}  // namespace

TEST_CASE("shipped table1 config") {
  const ExperimentConfig c = parse_config(MSLAB_EXPERIMENTS_DIR "/table1.cfg");
  CHECK(c.coefficient.kind == CoefficientSpec::Kind::Periodic);
  CHECK(c.coefficient.epsilon == doctest::Approx(1.0 / 100));
  REQUIRE(c.coarse_cells.size() == 1u);
  CHECK(c.coarse_cells[0] == 32);
  CHECK(c.fine_cells == 1024);
  CHECK(c.reference_cells == 2048);
  CHECK(c.gamma0 == 20);
  CHECK(c.gamma1 == doctest::Approx(0.1));
  CHECK(c.beta == 1);
  CHECK(c.full_scale);
  REQUIRE(c.rho.size() == 2u);
  CHECK(c.rho[0].mode == RhoMode::Epsilon);
  CHECK(c.rho[1].mode == RhoMode::FineH);
  CHECK(c.methods == std::vector<Method>{Method::MsFEMStandard, Method::MsFEMMixed, Method::FEMsFEM});
  CHECK(c.expect.size() == 4u);
}

TEST_CASE("every shipped config parses") {
  int count = 0;
  for (const auto& entry : fs::directory_iterator(MSLAB_EXPERIMENTS_DIR)) {
    if (entry.path().extension() != ".cfg") continue;
    ++count;
    CHECK_NOTHROW(parse_config(entry.path()));
  }
  CHECK(count == 10);
}

TEST_CASE("validation errors") {
  SUBCASE("divisibility") {
    const auto v = violations_of(
        "[coefficient]\nkind = periodic\nepsilon = 1/100\n[mesh]\nNH = 32\nnh = 1000\nhref = 1/2000\n[methods]\nlist = msfem\n");
    CHECK(mentions(v, "mesh.nh"));
  }
  SUBCASE("empty method list") {
    CHECK(mentions(violations_of("[coefficient]\nkind = constant\n[methods]\nlist =\n"), "methods.list"));
  }
  SUBCASE("unknown key") {
    const auto v = violations_of(trivial("1", "msfem") + "[mesh]\nrefinement = 3\n");
    CHECK(mentions(v, "mesh.refinement (line 16): unknown key"));
  }
  SUBCASE("missing coefficient file") {
    CHECK(mentions(violations_of("[coefficient]\nkind = raster\nfile = no_such.raster\n[methods]\nlist = msfem\n"),
                   "coefficient.file"));
  }
  SUBCASE("every violation is reported") {
    const auto v = violations_of(
        "[coefficient]\nkind = periodic\nepsilon = 1/100\n[mesh]\nNH = 32\nnh = 1000\n[methods]\nlist = galerkin\n"
        "[penalty]\ngamma0 = -1\n");
    CHECK(v.size() >= 3u);
    CHECK(mentions(v, "mesh.nh"));
    CHECK(mentions(v, "methods.list"));
    CHECK(mentions(v, "penalty.gamma0"));
  }
  SUBCASE("rho = epsilon needs an oscillation scale") {
    CHECK(mentions(violations_of("[coefficient]\nkind = constant\n[methods]\nlist = fe-msfem\n[penalty]\nrho = epsilon\n"),
                   "penalty.rho"));
  }
}

TEST_CASE("CSV schema is frozen") {
  CHECK(std::string(kCsvHeader) == "method,rel_l2,rel_linf,rel_energy,NH,nh,href,eps,beta,gamma0,gamma1,rho,seed,wall_ms");
  ResultRow row;
  row.errors.method = "msfem";
  row.errors.rel_l2 = 0.25;
  row.errors.rel_linf = 1.5e-3;
  row.errors.rel_energy = 0.125;
  row.errors.coarse_cells = 8;
  row.errors.fine_cells = 256;
  row.errors.reference_cells = 512;
  row.errors.epsilon = 1.0 / 32;
  row.errors.seed = 7;
  row.wall_ms = 42;
  CHECK(format_row(row) ==
        "msfem,2.500000e-01,1.500000e-03,1.250000e-01,8,256,512,3.125000e-02,nan,nan,nan,nan,7,42");
  std::ostringstream os;
  write_csv(os, {row, row});
  const std::string text = os.str();
  CHECK(text.rfind(std::string(kCsvHeader) + "\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  CHECK(text.find('\r') == std::string::npos);
}

TEST_CASE("zero source gives zero errors") {
  const auto rows = run_experiment(from_text(trivial("0", "msfem, mixed, fe-msfem")));
  REQUIRE(rows.size() == 3u);
  for (const auto& r : rows) {
    CHECK(r.errors.rel_l2 == 0);
    CHECK(r.errors.rel_linf == 0);
    CHECK(r.errors.rel_energy == 0);
  }
}

TEST_CASE("runs are reproducible apart from wall time") {
  const std::string text =
      "[coefficient]\nkind = lognormal\nvariance = 1\ncorrelation = 0.05\nnx = 64\nny = 64\nseed = 11\n"
      "[mesh]\nNH = 8\nnh = 64\nhref = 1/128\n[methods]\nlist = msfem, mixed, fe-msfem\n[penalty]\nrho = h\n"
      "[expect]\nfe-msfem.rel_energy = 0.5\ntolerance = 90%\n";
  const ExperimentConfig cfg = from_text(text);
  const auto a = run_experiment(cfg), b = run_experiment(cfg);
  CHECK(untimed(a) == untimed(b));
  const auto ca = check_expectations(cfg, a), cb = check_expectations(cfg, b);
  REQUIRE(ca.size() == 1u);
  CHECK(ca[0].pass == cb[0].pass);
  CHECK(ca[0].measured == cb[0].measured);
}

TEST_CASE("full-scale configs need the flag") {
  const ExperimentConfig c = parse_config(MSLAB_EXPERIMENTS_DIR "/table1.cfg");
  CHECK_THROWS_AS(run_experiment(c), FullScaleRequired);
}

TEST_CASE("suite runner") {
  TempDir dir("mslab_suite_test");
  dir.write("a.cfg", trivial("1", "msfem"));
  dir.write("b.cfg", trivial("1", "mixed"));
  dir.write("c.cfg", trivial("1", "fe-msfem") + "[expect]\nfe-msfem.rel_energy = 1\ntolerance = 100%\n");
  const SuiteResult s = run_suite(dir.path);
  CHECK(s.rows.size() == 3u);
  CHECK(s.exit_code == 0);
  CHECK(s.failures.empty());
  REQUIRE(s.checks.size() == 1u);
  CHECK(s.checks[0].pass);

  CHECK(run_suite(dir.path / "missing").exit_code == 2);

  const std::string cli = MSLAB_CLI;
  CHECK(shell(cli + " suite " + dir.path.string() + " > " + (dir.path / "out.csv").string() + " 2>/dev/null") == 0);
  std::ifstream csv(dir.path / "out.csv");
  std::string line;
  int lines = 0;
  while (std::getline(csv, line)) ++lines;
  CHECK(lines == 4);
  CHECK(shell(cli + " suite " + (dir.path / "missing").string() + " > /dev/null 2>&1") == 2);

  // a failing expectation makes the exit code nonzero, the other configs still run
  dir.write("d.cfg", trivial("1", "msfem") + "[expect]\nmsfem.rel_energy = 10\ntolerance = 1%\n");
  dir.write("e.cfg", "[coefficient]\nkind = nonsense\n");
  const SuiteResult f = run_suite(dir.path);
  CHECK(f.exit_code == 1);
  CHECK(f.rows.size() == 4u);
  CHECK(f.failures.size() == 1u);
}

TEST_CASE("command line tools") {
  TempDir dir("mslab_cli_test");
  const std::string cli = MSLAB_CLI;
  dir.write("cell.cfg", "[coefficient]\nkind = periodic\nepsilon = 1/32\n[methods]\nlist = msfem\n[homog]\nresolution = 32\n");
  CHECK(shell(cli + " homog " + (dir.path / "cell.cfg").string() + " > " + (dir.path / "a.csv").string() +
              " 2>/dev/null") == 0);
  std::ifstream a(dir.path / "a.csv");
  double a11, a12, a21, a22;
  char comma;
  a >> a11 >> comma >> a12 >> a21 >> comma >> a22;
  CHECK(a11 == doctest::Approx(3.888).epsilon(5e-3));
  CHECK(a22 == doctest::Approx(2.595).epsilon(5e-3));
  CHECK(a12 == a21);

  dir.write("g.spec", "variance = 1\ncorrelation_x = 0.1\ncorrelation_y = 0.1\nnx = 32\nny = 16\nseed = 3\n");
  CHECK(shell(cli + " gen-perm " + (dir.path / "g.spec").string() + " " + (dir.path / "g.raster").string() +
              " 2>/dev/null") == 0);
  const RasterField g = load_raster(dir.path / "g.raster");
  CHECK(g.nx == 32);
  CHECK(g.ny == 16);

  dir.write("run.cfg", trivial("1", "msfem"));
  CHECK(shell(cli + " run " + (dir.path / "run.cfg").string() + " --dump-fields " + (dir.path / "dump").string() +
              " > /dev/null 2>&1") == 0);
  CHECK(fs::exists(dir.path / "dump"));
  CHECK(shell(cli + " run " + (dir.path / "nope.cfg").string() + " > /dev/null 2>&1") != 0);
}
