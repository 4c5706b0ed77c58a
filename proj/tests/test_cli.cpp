#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "conjpt/cli.hpp"

using namespace conjpt;
using namespace conjpt::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("conjpt_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path write_config(const TempDir& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir.path / name;
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

std::string pointer_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.pointer();
  }
  return "<no error>";
}

int run_quiet(const std::string& command, const fs::path& config, const fs::path& out, RunFlags flags = {}) {
  std::ostringstream err;
  const int code = run(command, config, out, flags, err);
  if (code != 0) MESSAGE(err.str());
  return code;
}

const char* kCov2d = R"({
  "schema": 1,
  "problem": {"builtin": "cov2d"},
  "numerics": {"resolution": 21, "det_method": "closed_form"},
  "scan": {"radius": 3.0},
  "omega": {"seeds_per_axis": 8, "directions": 16}
})";

}  // namespace

TEST_CASE("numbers are written with 17 significant digits and round-trip exactly") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> mantissa(-1.0, 1.0);
  std::uniform_int_distribution<int> exponent(-300, 300);
  for (int i = 0; i < 1000; ++i) {
    const double x = std::ldexp(mantissa(rng), exponent(rng));
    const std::string s = format_number(x);
    CHECK(std::strtod(s.c_str(), nullptr) == x);
    CHECK(s.find(',') == std::string::npos);
  }
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(-2.0) == "-2");
}

TEST_CASE("csv tables have a header row and reject ragged rows") {
  CsvTable t({"a", "b"});
  t.add_row(std::vector<double>{1.0, 0.5});
  t.add_row(std::vector<std::string>{"x", "y"});
  CHECK(t.str() == "a,b\n1,0.5\nx,y\n");
  CHECK_THROWS_AS(t.add_row(std::vector<double>{1.0}), std::logic_error);
}

TEST_CASE("fnv1a matches the reference test vectors") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("config errors name the JSON pointer at fault") {
  CHECK(pointer_of(R"({"schema": 1, "problem": {"mode": "cov", "n": 1, "L": "0.5*u1^2", "psi": "z1^3"}})") ==
        "/problem/T");
  CHECK(pointer_of(R"({"schema": 1, "problem": {"mode": "cov", "n": 1, "T": -1, "L": "0.5*u1^2", "psi": "z1"}})") ==
        "/problem/T");
  CHECK(pointer_of(R"({"schema": 1, "problem": {"mode": "cov", "n": 1, "T": 1, "L": "0.5*u1^2", "psi": "z2"}})") ==
        "/problem/psi");
  CHECK(pointer_of(R"({"schema": 2, "problem": {"builtin": "bench1d"}})") == "/schema");
  CHECK(pointer_of(R"({"problem": {"builtin": "bench1d"}})") == "/schema");
  CHECK(pointer_of(R"({"schema": 1, "problem": {"builtin": "nope"}})") == "/problem/builtin");
  CHECK(pointer_of(R"({"schema": 1, "problem": {"builtin": "bench1d"}, "numerics": {"stepz": 3}})") ==
        "/numerics/stepz");
  CHECK(pointer_of(R"({"schema": 1, "problem": {"builtin": "bench1d"}, "numerics": {"steps": 8}})") ==
        "/numerics/steps");
  CHECK(pointer_of(R"({"schema": 1, "problem": {"builtin": "cov2d"}, "point": {"z": [1]}})") == "/point/z");
  CHECK(pointer_of(R"({"schema": 1, "problem": {"builtin": "cov2d"}, "point": {"z": [1, "a"]}})") == "/point/z/1");
  CHECK(pointer_of(R"({"schema": 1, "problem": {"builtin": "affine2d"}, "numerics": {"det_method": "closed_form"}})") ==
        "/numerics/det_method");
  CHECK(pointer_of(R"({"schema": 1, "problem": {"mode": "general", "n": 1, "m": 1, "T": 1, "L": "u1^2",
                       "psi": "z1", "fields": [["0"], ["1 +"]]}})") == "/problem/fields/1/0");
  CHECK(pointer_of(R"({"schema": 1, "problem": {"builtin": "cov2d"}, "candidates": [{"z": [0, 0], "v": [0, 0]}]})") ==
        "/candidates/0/v");
  CHECK(pointer_of("{ not json") == "");
}

TEST_CASE("a general config builds the control-affine problem it describes") {
  const RunConfig cfg = parse_config(R"({
    "schema": 1,
    "problem": {"mode": "general", "n": 2, "m": 1, "T": 0.5,
                "fields": [["x2", "-x1"], ["0", "1"]],
                "L": "0.5 * u1^2 + x1^2", "psi": "z1 * z2"},
    "numerics": {"steps": 64, "box_radius": 2}
  })");
  CHECK(cfg.spec.n == 2);
  CHECK(cfg.spec.m == 1);
  CHECK(cfg.spec.horizon == 0.5);
  CHECK(cfg.spec.box_radius == 2.0);
  CHECK_FALSE(cfg.cov);
  const Vec x = (Vec(2) << 0.3, -0.2).finished();
  const Vec u = (Vec(1) << 1.5).finished();
  const Vec f = assemble_f(cfg.spec, x, u);
  CHECK(f[0] == doctest::Approx(-0.2));
  CHECK(f[1] == doctest::Approx(-0.3 + 1.5));
  CHECK(cfg.numerics.steps == 64);
}

TEST_CASE("builtin horizon override rebuilds the calculus-of-variations problem") {
  const RunConfig cfg = parse_config(R"({"schema": 1, "problem": {"builtin": "bench1d", "T": 2.0}})");
  REQUIRE(cfg.cov);
  CHECK(cfg.cov->horizon == 2.0);
  CHECK(cfg.spec.horizon == 2.0);
}

TEST_CASE("scan writes the candidate table and result.json records hash and tolerances") {
  TempDir dir;
  const fs::path config = write_config(dir, "cov2d.json", kCov2d);
  REQUIRE(run_quiet("scan", config, dir.path / "out") == 0);
  const std::string csv = slurp(dir.path / "out" / "candidates.csv");
  CHECK(csv.substr(0, csv.find('\n')) == "z1,z2,det,sigma_min,v1,v2,kappa");
  CHECK(std::count(csv.begin(), csv.end(), '\n') > 5);

  const auto result = nlohmann::json::parse(slurp(dir.path / "out" / "result.json"));
  char hash[20];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(kCov2d)));
  CHECK(result["config"]["fnv1a64"] == hash);
  CHECK(result["schema"] == 1);
  CHECK(result["tolerances"]["singular_ratio"] == 1e-6);
  CHECK(result["tolerances"]["det_method"] == "closed_form");
  CHECK(result["summary"]["candidates"].get<int>() > 0);
}

TEST_CASE("oracle on the 1D benchmark reports the lemma quantities") {
  TempDir dir;
  const fs::path config = write_config(dir, "bench1d.json", R"({
    "schema": 1, "problem": {"builtin": "bench1d"},
    "numerics": {"resolution": 21}, "scan": {"radius": 1.0}
  })");
  REQUIRE(run_quiet("oracle", config, dir.path / "out") == 0);
  const auto s = nlohmann::json::parse(slurp(dir.path / "out" / "result.json"))["summary"];
  CHECK(s["pass"] == true);
  CHECK(s["candidates"] == 1);
  CHECK(std::abs(s["g1"].get<double>()) <= 1e-6);
  CHECK(std::abs(s["g2"].get<double>()) <= 1e-6);
  CHECK(std::abs(s["g3"].get<double>() - 1.0) <= 1e-3);
  CHECK(std::abs(s["kappa"].get<double>() + 1.0) <= 1e-6);
}

TEST_CASE("exit codes: config error 1, numerical failure 2") {
  TempDir dir;
  std::ostringstream err;
  const fs::path no_t = write_config(
      dir, "no_t.json", R"({"schema": 1, "problem": {"mode": "cov", "n": 1, "L": "0.5*u1^2", "psi": "z1^3"}})");
  CHECK(run("solve", no_t, dir.path / "a", {}, err) == 1);
  CHECK(err.str().find("/problem/T") != std::string::npos);

  // L = u^2/2 - u^4 has no minimizer, so the Hamiltonian minimization fails.
  err.str("");
  const fs::path nonconvex = write_config(dir, "nonconvex.json", R"({
    "schema": 1, "problem": {"mode": "cov", "n": 1, "T": 1, "L": "0.5*u1^2 - u1^4", "psi": "3*z1"},
    "point": {"z": [0.0]}})");
  CHECK(run("solve", nonconvex, dir.path / "b", {}, err) == 2);
  CHECK(err.str().find("minimize_hamiltonian") != std::string::npos);

  err.str("");
  const fs::path general = write_config(dir, "general.json", R"({"schema": 1, "problem": {"builtin": "affine2d"}})");
  CHECK(run("omega", general, dir.path / "c", {}, err) == 1);
  CHECK(run("solve", general, dir.path / "d", {}, err) == 1);
  CHECK(err.str().find("/point/z") != std::string::npos);
  CHECK(run("nope", general, dir.path / "e", {}, err) == 1);
}

TEST_CASE("the executable forwards exit codes and diagnostics") {
  TempDir dir;
  const fs::path no_t = write_config(
      dir, "no_t.json", R"({"schema": 1, "problem": {"mode": "cov", "n": 1, "L": "0.5*u1^2", "psi": "z1^3"}})");
  const fs::path err = dir.path / "stderr.txt";
  const std::string cmd = std::string(CONJPT_EXECUTABLE) + " solve --config " + no_t.string() + " --out " +
                          (dir.path / "out").string() + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 1);
  CHECK(slurp(err).find("/problem/T") != std::string::npos);
}

TEST_CASE("plot output: SVG contour for n = 2, grid CSV otherwise") {
  TempDir dir;
  RunFlags flags;
  flags.plot = true;
  REQUIRE(run_quiet("scan", write_config(dir, "c.json", kCov2d), dir.path / "two", flags) == 0);
  const std::string svg = slurp(dir.path / "two" / "det_contour.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("<line") != std::string::npos);
  CHECK(fs::exists(dir.path / "two" / "det_grid.csv"));

  const fs::path one = write_config(dir, "b.json", R"({"schema": 1, "problem": {"builtin": "bench1d"},
    "numerics": {"resolution": 11}, "scan": {"radius": 1.0}})");
  REQUIRE(run_quiet("scan", one, dir.path / "one", flags) == 0);
  CHECK_FALSE(fs::exists(dir.path / "one" / "det_contour.svg"));
  const std::string grid = slurp(dir.path / "one" / "det_grid.csv");
  CHECK(grid.substr(0, grid.find('\n')) == "z1,det,sigma_min");
  CHECK(std::count(grid.begin(), grid.end(), '\n') == 12);
}

TEST_CASE("reruns produce byte-identical CSV, independent of the thread count") {
  TempDir dir;
  const fs::path cov2d = write_config(dir, "cov2d.json", kCov2d);
  const fs::path degenerate = write_config(dir, "deg.json", R"({"schema": 1, "problem": {"builtin": "degenerate1d"},
    "numerics": {"seed": 7}, "perturb": {"trials": 12}})");
  struct Case {
    std::string command;
    fs::path config;
    std::string csv;
  };
  const std::vector<Case> cases = {{"scan", cov2d, "candidates.csv"},
                                   {"omega", cov2d, "omega.csv"},
                                   {"hmodel", cov2d, "hmodel.csv"},
                                   {"perturb", degenerate, "perturb.csv"}};
  for (const auto& c : cases) {
    RunFlags one, four;
    one.threads = 1;
    four.threads = 4;
    REQUIRE(run_quiet(c.command, c.config, dir.path / (c.command + "_a"), one) == 0);
    REQUIRE(run_quiet(c.command, c.config, dir.path / (c.command + "_b"), four) == 0);
    const std::string a = slurp(dir.path / (c.command + "_a") / c.csv);
    CHECK(!a.empty());
    CHECK(a == slurp(dir.path / (c.command + "_b") / c.csv));
  }
  set_thread_count(0);
}
