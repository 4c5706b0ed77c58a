// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance                 all criteria
//   acceptance --criterion 7b  one criterion (1..6, 7a, 7b, 8, 9)
//
// Exit status is 0 only when every selected criterion passes.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <CLI11.hpp>

#include "conjpt/catalog.hpp"
#include "conjpt/cli.hpp"
#include "conjpt/conjugate.hpp"
#include "conjpt/cov.hpp"
#include "conjpt/finite_difference.hpp"
#include "conjpt/oracle.hpp"
#include "conjpt/pontryagin.hpp"

using namespace conjpt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buffer[256];
  std::snprintf(buffer, sizeof buffer, format, a, b, c, d);
  return buffer;
}

Vec random_in_ball(std::mt19937_64& rng, int n, double radius) {
  std::uniform_real_distribution<double> uniform(-radius, radius);
  Vec z(n);
  do {
    for (int i = 0; i < n; ++i) z[i] = uniform(rng);
  } while (z.norm() > radius);
  return z;
}

Vec random_unit(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = normal(rng);
  return v.normalized();
}

// Lemma check on the cubic benchmark: scan, g-derivatives by replay, closed-form kappa.
Outcome criterion1() {
  const CatalogEntry bench = builtin_problem("bench1d");
  const auto found = scan(bench.spec, ScanBox::cube(1, 1.0), 21);
  if (found.size() != 1) return {false, "scan found " + std::to_string(found.size()) + " candidates, expected 1"};
  const ConjugateCandidate& c = found.front();
  const LemmaReport r = check_lemma(bench.spec, c);
  ConjugateOptions closed;
  closed.method = DetMethod::closed_form;
  closed.cov = bench.cov;
  const double kappa = necessary_condition(bench.spec, c, closed);
  const bool pass = std::abs(c.z[0]) <= 1e-8 && c.v[0] == 1.0 && std::abs(r.g.g1) <= 1e-6 &&
                    std::abs(r.g.g2) <= 1e-6 && std::abs(r.g.g3 - 1.0) <= 1e-3 && std::abs(kappa + 1.0) <= 1e-6 &&
                    std::abs(r.g.g3 + kappa) <= 1e-3;
  return {pass, fmt("zbar=%.1e g'=%.1e g''=%.1e ", c.z[0], r.g.g1, r.g.g2) +
                    fmt("g'''=%.9f kappa=%.12f", r.g.g3, kappa)};
}

// General Pontryagin solver against the closed forms at 50 random z in B_3.
Outcome criterion2() {
  const CatalogEntry e = builtin_problem("trig2d");
  std::mt19937_64 rng(2);
  double worst[3] = {0, 0, 0};
  for (int trial = 0; trial < 50; ++trial) {
    const Vec z = random_in_ball(rng, 2, 3.0);
    const Vec v = random_unit(rng, 2);
    const SensitivityBundle b = solve_variational(e.spec, solve_extremal(e.spec, z, 400), v);
    const ClosedForms cf = closed_forms(*e.cov, z, v);
    worst[0] = std::max(worst[0], (b.base.x.front() - cf.x0).norm());
    worst[1] = std::max(worst[1], (b.x_z.front() - cf.x_z).norm());
    worst[2] = std::max(worst[2], (b.xzz_vv.front() - *cf.x_zz_vv).norm());
  }
  const bool pass = worst[0] <= 1e-7 && worst[1] <= 1e-7 && worst[2] <= 1e-7;
  return {pass, fmt("max |x0 diff|=%.1e |x_z diff|=%.1e |x_zz(v,v) diff|=%.1e", worst[0], worst[1], worst[2])};
}

// Sensitivities against finite differences of z -> x(0, z) at 20 random (z, v).
Outcome criterion3() {
  std::string detail;
  bool pass = true;
  for (const char* name : {"trig2d", "affine2d"}) {
    const CatalogEntry e = builtin_problem(name);
    std::mt19937_64 rng(3);
    auto x0 = [&](const Vec& z) { return Vec(solve_extremal(e.spec, z, 400).x.front()); };
    double first = 0.0, second = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const Vec z = random_in_ball(rng, 2, 3.0);
      const Vec v = random_unit(rng, 2);
      const SensitivityBundle b = solve_variational(e.spec, solve_extremal(e.spec, z, 400), v);
      Mat fd_xz(2, 2);
      for (int j = 0; j < 2; ++j) fd_xz.col(j) = fd::partial(x0, z, j, 1e-3);
      const double h = 1e-2;
      const Vec fd_xzz = (-x0(Vec(z + 2 * h * v)) + 16.0 * x0(Vec(z + h * v)) - 30.0 * x0(z) +
                          16.0 * x0(Vec(z - h * v)) - x0(Vec(z - 2 * h * v))) /
                         (12.0 * h * h);
      first = std::max(first, (b.x_z.front() - fd_xz).norm());
      second = std::max(second, (b.xzz_vv.front() - fd_xzz).norm());
    }
    pass = pass && first <= 1e-5 && second <= 1e-4;
    detail += std::string(name) + fmt(": x_z %.1e, x_zz(v,v) %.1e; ", first, second);
  }
  return {pass, detail};
}

double kernel_identity(const CovProblem& cov, const OmegaPoint& pt) {
  const Jet psi = cov.terminal->jet(pt.z, 2);
  const Mat D2H = cov.model.derivatives(psi.grad, 2).hessian;
  return (psi.hess * pt.v - D2H.partialPivLu().solve(pt.v) / cov.horizon).norm();
}

Outcome criterion4() {
  const CatalogEntry e = builtin_problem("trig2d");
  const auto zeros = omega_solve(*e.cov);
  if (zeros.empty()) return {false, "no Omega zeros found"};
  double worst = 0.0;
  for (const auto& p : zeros) worst = std::max(worst, kernel_identity(*e.cov, p));
  return {worst <= 1e-6, fmt("%.0f zeros, max |D2psi v - (D2H)^-1 v / T| = %.1e", double(zeros.size()), worst)};
}

Outcome criterion5() {
  const CatalogEntry e = builtin_problem("trig2d");
  const auto zeros = omega_solve(*e.cov);
  OmegaOptions dense;
  dense.seeds_per_axis *= 2;
  dense.directions *= 2;
  const auto denser = omega_solve(*e.cov, dense);
  double ratio = std::numeric_limits<double>::infinity(), separation = std::numeric_limits<double>::infinity();
  bool transversal = !zeros.empty();
  for (std::size_t i = 0; i < zeros.size(); ++i) {
    const Vec& s = zeros[i].jacobian_singular_values;
    ratio = std::min(ratio, s[s.size() - 1] / s[0]);
    transversal = transversal && zeros[i].transversal && s.size() == 3;
    for (std::size_t j = 0; j < i; ++j) separation = std::min(separation, (zeros[i].z - zeros[j].z).norm());
  }
  const auto bench = omega_solve(*builtin_problem("bench1d").cov);
  const bool pass = transversal && ratio > 1e-6 && separation > 1e-3 && denser.size() == zeros.size() && bench.empty();
  return {pass, fmt("n=2: %.0f zeros (%.0f with doubled seeds), min sigma3/sigma1 = %.3f, min separation = ",
                    double(zeros.size()), double(denser.size()), ratio) +
                    (std::isfinite(separation) ? fmt("%.3f", separation) : std::string("n/a (single zero)")) +
                    fmt("; n=1 benchmark: %.0f zeros", double(bench.size()))};
}

Outcome criterion6() {
  const CatalogEntry e = builtin_problem("degenerate1d");
  GenericityOptions g;
  g.trials = 100;
  g.magnitude = 1e-2;
  g.seed = 1;
  const GenericityReport r = genericity_experiment(*e.cov, g);
  const bool pass = r.success_fraction >= 0.95 && r.baseline_non_transversal >= 1;
  return {pass, fmt("success %.2f over 100 trials; theta = 0: %.0f zeros, %.0f non-transversal", r.success_fraction,
                    r.baseline_zeros, r.baseline_non_transversal)};
}

std::string counts_text(const BoxCount& bc) {
  std::string s;
  for (std::size_t i = 0; i < bc.counts.size(); ++i)
    s += (i ? ", " : "") + fmt("N(%g)=", bc.epsilons[i]) + std::to_string(bc.counts[i]);
  return s;
}

Outcome criterion7a() {
  const CatalogEntry e = builtin_problem("trig2d");
  const auto zeros = omega_solve(*e.cov);
  const BoxCount bc = conjugate_image_boxcount(zeros, {0.2, 0.1, 0.05, 0.025, 0.0125, 0.00625});
  const std::size_t k = bc.counts.size();
  const bool pass = !zeros.empty() && bc.counts[k - 1] == bc.counts[k - 2] && bc.counts[k - 2] == bc.counts[k - 3] &&
                    bc.counts[k - 1] <= zeros.size();
  return {pass, "n=2: " + counts_text(bc)};
}

Outcome criterion7b() {
  const CatalogEntry e = builtin_problem("trig3d");
  const OmegaOptions o;
  auto points = omega_solve(*e.cov, o);
  const std::size_t found = points.size();
  const auto traced = omega_trace(*e.cov, points, o);
  points.insert(points.end(), traced.begin(), traced.end());
  const auto transversal = std::count_if(points.begin(), points.end(), [](const auto& p) { return p.transversal; });
  const BoxCount bc = conjugate_image_boxcount(points, {0.2, 0.1, 0.05});
  const bool pass = bc.slope >= 0.7 && bc.slope <= 1.3;
  return {pass, fmt("n=3: %.0f zeros (%.0f transversal), %.0f traced, ", double(found), double(transversal),
                    double(traced.size())) +
                    counts_text(bc) + fmt(", slope %.3f", bc.slope)};
}

// Observed order from dyadic refinement: log2 |q_N - q_2N| / |q_2N - q_4N|.
Outcome criterion8() {
  const CatalogEntry e = builtin_problem("affine2d");
  std::mt19937_64 rng(8);
  double worst = std::numeric_limits<double>::infinity();
  double reference_error = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const Vec z = random_in_ball(rng, 2, 3.0);
    const Vec v = random_unit(rng, 2);
    std::vector<std::array<Vec, 3>> q;
    for (int N : {100, 200, 400, 800, 6400}) {
      const SensitivityBundle b = solve_variational(e.spec, solve_extremal(e.spec, z, N), v);
      Vec flat_xz = Eigen::Map<const Vec>(b.x_z.front().data(), 4);
      q.push_back({b.base.x.front(), flat_xz, b.xzz_vv.front()});
    }
    for (int k = 0; k < 3; ++k) {
      for (int i = 0; i + 2 < 4; ++i) {
        const double coarse = (q[i][k] - q[i + 1][k]).norm();
        const double fine = (q[i + 1][k] - q[i + 2][k]).norm();
        worst = std::min(worst, std::log2(coarse / fine));
      }
      reference_error = std::max(reference_error, (q[3][k] - q[4][k]).norm());
    }
  }
  return {worst >= 3.5, fmt("min observed order %.3f over 5 points x {x0, x_z, x_zz(v,v)}; ", worst) +
                            fmt("max |q_800 - q_6400| = %.1e", reference_error)};
}

// Every CLI command run twice from the same config, once with one thread and
// once with four; all CSV bodies must match byte for byte.
Outcome criterion9() {
  const fs::path dir = fs::temp_directory_path() / ("conjpt_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto config = [&](const std::string& name, const std::string& text) {
    std::ofstream(dir / name, std::ios::binary) << text;
    return dir / name;
  };
  const fs::path bench = config("bench1d.json", R"({"schema": 1, "problem": {"builtin": "bench1d"},
    "numerics": {"resolution": 21}, "point": {"z": [0.5], "v": [1]}, "scan": {"radius": 1.0}})");
  const fs::path cov2d = config("cov2d.json", R"({"schema": 1, "problem": {"builtin": "cov2d"},
    "numerics": {"resolution": 21, "det_method": "closed_form"}, "point": {"z": [0.9, -0.4], "v": [0.6, 0.8]},
    "scan": {"radius": 3.0}})");
  const fs::path degenerate = config("degenerate1d.json", R"({"schema": 1, "problem": {"builtin": "degenerate1d"},
    "perturb": {"trials": 20}})");
  const fs::path generic3d = config("generic3d.json", R"json({"schema": 1, "problem": {"mode": "cov", "n": 3, "T": 1,
    "L": "0.5 * (u1^2 + u2^2 + u3^2)",
    "psi": "cos(z1) + 0.5 * sin(z1 + z2) + 0.4 * cos(z2 - 0.7 * z3) + 0.1 * z1 * z3"},
    "omega": {"seeds_per_axis": 6, "directions": 12}})json");

  const std::vector<std::pair<std::string, fs::path>> runs = {
      {"solve", cov2d}, {"sens", cov2d},      {"scan", cov2d},           {"kappa", cov2d},
      {"oracle", bench}, {"hmodel", cov2d},   {"omega", cov2d},          {"perturb", degenerate},
      {"boxcount", generic3d}, {"scan", bench}, {"sens", bench}};
  std::size_t compared = 0;
  std::string mismatch;
  for (std::size_t r = 0; r < runs.size() && mismatch.empty(); ++r) {
    const auto& [command, cfg] = runs[r];
    const fs::path a = dir / (std::to_string(r) + "_a"), b = dir / (std::to_string(r) + "_b");
    cli::RunFlags one, four;
    one.threads = 1;
    four.threads = 4;
    one.plot = four.plot = command == "scan";
    std::ostringstream err;
    if (cli::run(command, cfg, a, one, err) != 0 || cli::run(command, cfg, b, four, err) != 0) {
      mismatch = command + " failed: " + err.str();
      break;
    }
    for (const auto& entry : fs::directory_iterator(a)) {
      if (entry.path().extension() != ".csv") continue;
      std::ifstream fa(entry.path(), std::ios::binary), fb(b / entry.path().filename(), std::ios::binary);
      std::stringstream sa, sb;
      sa << fa.rdbuf();
      sb << fb.rdbuf();
      if (sa.str().empty() || sa.str() != sb.str()) mismatch = command + ": " + entry.path().filename().string();
      ++compared;
    }
  }
  set_thread_count(0);
  fs::remove_all(dir);
  if (!mismatch.empty()) return {false, "differs: " + mismatch};
  return {compared >= runs.size(), std::to_string(compared) + " CSV files identical across reruns (1 vs 4 threads)"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string only;
  app.add_option("--criterion", only, "run a single criterion: 1..6, 7a, 7b, 8, 9");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1", criterion1},   {"2", criterion2},   {"3", criterion3}, {"4", criterion4}, {"5", criterion5},
      {"6", criterion6},   {"7a", criterion7a}, {"7b", criterion7b}, {"8", criterion8}, {"9", criterion9}};

  bool all = true, matched = false;
  for (const auto& [id, check] : criteria) {
    if (!only.empty() && only != id) continue;
    matched = true;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& ex) {
      outcome = {false, std::string("exception: ") + ex.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "criterion " << id << ": " << (outcome.pass ? "PASS" : "FAIL") << "  " << outcome.detail
              << fmt("  (%.1f s)", seconds) << std::endl;
    all = all && outcome.pass;
  }
  if (!matched) {
    std::cerr << "unknown criterion '" << only << "'\n";
    return 2;
  }
  return all ? 0 : 1;
}
