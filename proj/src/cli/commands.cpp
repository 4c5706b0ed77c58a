#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <ostream>

#include <json.hpp>

#include "conjpt/cli.hpp"
#include "conjpt/errors.hpp"
#include "conjpt/parallel.hpp"

namespace conjpt::cli {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

constexpr const char* kVersion = "1.0.0";
// |kappa| above this at a conjugate point rules out a minimizer.
constexpr double kKappaTolerance = 1e-6;

json to_json(const Vec& v) {
  json a = json::array();
  for (double x : v) a.push_back(x);
  return a;
}

json to_json(const Mat& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) rows.push_back(to_json(Vec(m.row(i).transpose())));
  return rows;
}

std::vector<std::string> names(const std::string& prefix, int count) {
  std::vector<std::string> out;
  for (int i = 1; i <= count; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

std::vector<std::string> matrix_names(const std::string& prefix, int rows, int cols) {
  std::vector<std::string> out;
  for (int i = 1; i <= rows; ++i)
    for (int j = 1; j <= cols; ++j) out.push_back(prefix + "_" + std::to_string(i) + "_" + std::to_string(j));
  return out;
}

template <class... Lists>
std::vector<std::string> concat(Lists&&... lists) {
  std::vector<std::string> out;
  (out.insert(out.end(), lists.begin(), lists.end()), ...);
  return out;
}

void append(std::vector<double>& row, const Vec& v) { row.insert(row.end(), v.data(), v.data() + v.size()); }

void append_rowmajor(std::vector<double>& row, const Mat& m) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
}

struct Context {
  Context(const RunConfig& config, std::filesystem::path dir, RunFlags run_flags)
      : cfg(config), out(std::move(dir)), flags(run_flags) {}

  const RunConfig& cfg;
  std::filesystem::path out;
  RunFlags flags;
  json summary = json::object();
  json timings = json::object();
  std::vector<std::string> files;
  std::vector<Marker> markers;

  void write(const std::string& name, const CsvTable& table) {
    table.write(out / name);
    files.push_back(name);
  }

  template <class F>
  auto timed(const std::string& phase, F&& f) {
    const auto start = Clock::now();
    auto result = f();
    timings[phase] = std::chrono::duration<double>(Clock::now() - start).count();
    return result;
  }
};

const CovProblem& require_cov(const RunConfig& cfg, const std::string& command) {
  if (!cfg.cov) throw ConfigError("/problem", command + " needs a calculus-of-variations problem (mode \"cov\")");
  return *cfg.cov;
}

const Vec& require_point(const RunConfig& cfg) {
  if (!cfg.point) throw ConfigError("/point/z", "missing required key");
  return *cfg.point;
}

NewtonOptions newton_options(const RunConfig& cfg) {
  NewtonOptions o;
  o.tolerance = cfg.numerics.newton_tolerance;
  return o;
}

// Explicit candidates from the config, or the result of a scan over the box.
std::vector<ConjugateCandidate> candidates(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const ConjugateOptions opts = cfg.conjugate_options();
  if (cfg.candidates.empty())
    return ctx.timed("scan", [&] { return scan(cfg.spec, cfg.scan_box, cfg.numerics.resolution, opts); });
  std::vector<ConjugateCandidate> out(cfg.candidates.size());
  ctx.timed("det", [&] {
    for_each_index(out.size(), Execution::parallel, [&](std::size_t i) {
      const DetResult d = det_xz(cfg.spec, cfg.candidates[i].z, opts);
      ConjugateCandidate& c = out[i];
      c.z = cfg.candidates[i].z;
      c.v = cfg.candidates[i].v;
      c.x0 = d.x0;
      c.sigma_min = d.sigma_min;
      c.det_value = d.det;
      c.accepted = d.sigma_min <= cfg.numerics.singular_ratio * std::max(1.0, d.sigma_max);
    });
    return 0;
  });
  return out;
}

void run_solve(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const Vec& z = require_point(cfg);
  const ExtremalTrajectory tr =
      ctx.timed("solve", [&] { return solve_extremal(cfg.spec, z, cfg.numerics.steps, newton_options(cfg)); });
  const int n = cfg.spec.n, m = cfg.spec.m;
  CsvTable table(concat(std::vector<std::string>{"t"}, names("x", n), names("p", n), names("u", m),
                        std::vector<std::string>{"L"}));
  for (int j = 0; j <= tr.steps; ++j) {
    std::vector<double> row = {tr.time(j)};
    append(row, tr.x[j]);
    append(row, tr.p[j]);
    append(row, tr.u[j]);
    row.push_back(tr.running_cost[j]);
    table.add_row(row);
  }
  ctx.write("trajectory.csv", table);
  ctx.summary = {{"z", to_json(z)},
                 {"x0", to_json(tr.x.front())},
                 {"p0", to_json(tr.p.front())},
                 {"u0", to_json(tr.u.front())},
                 {"cost", tr.cost},
                 {"max_stationarity_residual", tr.max_stationarity_residual}};
  ctx.markers.push_back({z, true});
}

void run_sens(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const Vec& z = require_point(cfg);
  const SensitivityBundle b = ctx.timed("sensitivities", [&] {
    return solve_variational(cfg.spec, solve_extremal(cfg.spec, z, cfg.numerics.steps, newton_options(cfg)),
                             cfg.direction);
  });
  const int n = cfg.spec.n, m = cfg.spec.m;
  CsvTable table(concat(std::vector<std::string>{"t"}, matrix_names("xz", n, n), matrix_names("pz", n, n),
                        matrix_names("uz", m, n)));
  for (int j = 0; j <= b.base.steps; ++j) {
    std::vector<double> row = {b.base.time(j)};
    append_rowmajor(row, b.x_z[j]);
    append_rowmajor(row, b.p_z[j]);
    append_rowmajor(row, b.u_z[j]);
    table.add_row(row);
  }
  ctx.write("sensitivities.csv", table);

  const Mat& xz0 = b.x_z.front();
  const Eigen::JacobiSVD<Mat> svd(xz0);
  ctx.summary = {{"z", to_json(z)},
                 {"x0", to_json(b.base.x.front())},
                 {"x_z0", to_json(xz0)},
                 {"p_z0", to_json(b.p_z.front())},
                 {"det_x_z0", xz0.determinant()},
                 {"sigma_min", svd.singularValues()(n - 1)},
                 {"sigma_max", svd.singularValues()(0)},
                 {"costate_identity_defect", costate_identity_defect(cfg.spec, b)}};

  if (b.direction) {
    const Vec& v = *b.direction;
    CsvTable second(concat(std::vector<std::string>{"t"}, names("xzz_vv", n), names("pzz_vv", n),
                           names("uzz_vv", m), names("w", n)));
    for (int j = 0; j <= b.base.steps; ++j) {
      std::vector<double> row = {b.base.time(j)};
      append(row, b.xzz_vv[j]);
      append(row, b.pzz_vv[j]);
      append(row, b.uzz_vv[j]);
      append(row, b.w[j]);
      second.add_row(row);
    }
    ctx.write("second_order.csv", second);
    ctx.summary["v"] = to_json(v);
    ctx.summary["x_zz0_vv"] = to_json(b.xzz_vv.front());
    ctx.summary["x_z0_v_norm"] = (xz0 * v).norm();
    ctx.summary["kappa"] = (b.p_z.front() * v).dot(b.xzz_vv.front());
  }
  ctx.markers.push_back({z, true});
}

void write_candidates(Context& ctx, const std::vector<ConjugateCandidate>& found) {
  const int n = ctx.cfg.spec.n;
  CsvTable table(concat(names("z", n), std::vector<std::string>{"det", "sigma_min"}, names("v", n),
                        std::vector<std::string>{"kappa"}));
  for (const auto& c : found) {
    std::vector<double> row;
    append(row, c.z);
    row.push_back(c.det_value);
    row.push_back(c.sigma_min);
    append(row, c.v);
    row.push_back(c.kappa);
    table.add_row(row);
    ctx.markers.push_back({c.z, c.accepted});
  }
  ctx.write("candidates.csv", table);
}

void run_scan(Context& ctx) {
  const auto found = candidates(ctx);
  write_candidates(ctx, found);
  const auto accepted = std::count_if(found.begin(), found.end(), [](const auto& c) { return c.accepted; });
  ctx.summary = {{"candidates", found.size()},
                 {"accepted", accepted},
                 {"box_lower", to_json(ctx.cfg.scan_box.lower)},
                 {"box_upper", to_json(ctx.cfg.scan_box.upper)},
                 {"resolution", ctx.cfg.numerics.resolution}};
}

void run_kappa(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  auto found = candidates(ctx);
  const ConjugateOptions opts = cfg.conjugate_options();
  ctx.timed("kappa", [&] {
    for_each_index(found.size(), Execution::parallel,
                   [&](std::size_t i) { found[i].kappa = necessary_condition(cfg.spec, found[i], opts); });
    return 0;
  });
  const int n = cfg.spec.n;
  CsvTable table(concat(names("z", n), names("x0_", n), names("v", n),
                        std::vector<std::string>{"sigma_min", "kappa", "verdict"}));
  int excluded = 0;
  for (const auto& c : found) {
    std::vector<std::string> row;
    for (double x : c.z) row.push_back(format_number(x));
    for (double x : c.x0) row.push_back(format_number(x));
    for (double x : c.v) row.push_back(format_number(x));
    row.push_back(format_number(c.sigma_min));
    row.push_back(format_number(c.kappa));
    const bool nonzero = std::abs(c.kappa) > kKappaTolerance;
    excluded += nonzero;
    // A nonzero kappa at a conjugate point rules out local minimality of the extremal.
    row.push_back(!c.accepted ? "not_conjugate" : nonzero ? "not_a_minimizer" : "undecided");
    table.add_row(row);
    ctx.markers.push_back({c.z, nonzero});
  }
  ctx.write("kappa.csv", table);
  ctx.summary = {{"candidates", found.size()}, {"kappa_nonzero", excluded}};
}

void run_oracle(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const auto found = candidates(ctx);
  std::vector<LemmaReport> reports(found.size());
  const OracleOptions oracle = cfg.oracle_options();
  const ConjugateOptions conj = cfg.conjugate_options();
  ctx.timed("oracle", [&] {
    for (std::size_t i = 0; i < found.size(); ++i) reports[i] = check_lemma(cfg.spec, found[i], oracle, conj);
    return 0;
  });
  const int n = cfg.spec.n;
  CsvTable table(concat(names("z", n), names("v", n),
                        std::vector<std::string>{"g0", "g1", "g2", "g3", "kappa", "g3_plus_kappa", "pass"}));
  json rows = json::array();
  bool all = !found.empty();
  for (std::size_t i = 0; i < found.size(); ++i) {
    const LemmaReport& r = reports[i];
    std::vector<double> row;
    append(row, found[i].z);
    append(row, found[i].v);
    for (double x : {r.g.g0, r.g.g1, r.g.g2, r.g.g3, r.kappa, r.g.g3 + r.kappa}) row.push_back(x);
    row.push_back(r.pass ? 1.0 : 0.0);
    table.add_row(row);
    all = all && r.pass;
    rows.push_back({{"z", to_json(found[i].z)},
                    {"v", to_json(found[i].v)},
                    {"g1", r.g.g1},
                    {"g2", r.g.g2},
                    {"g3", r.g.g3},
                    {"kappa", r.kappa},
                    {"pass", r.pass}});
    ctx.markers.push_back({found[i].z, !r.pass});
  }
  ctx.write("oracle.csv", table);
  ctx.summary = {{"candidates", found.size()}, {"pass", all}, {"reports", rows}};
  if (!found.empty()) {
    const LemmaReport& r = reports.front();
    ctx.summary["g1"] = r.g.g1;
    ctx.summary["g2"] = r.g.g2;
    ctx.summary["g3"] = r.g.g3;
    ctx.summary["kappa"] = r.kappa;
    ctx.summary["first_order_tolerance"] = r.first_order_tolerance;
    ctx.summary["third_order_tolerance"] = r.third_order_tolerance;
  }
}

void run_hmodel(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const CovProblem& cov = require_cov(cfg, "hmodel");
  const int n = cov.dim();
  if (n > 3) throw ConfigError("/problem/n", "hmodel tables support n <= 3");
  const int res = cfg.p_resolution;
  std::size_t count = 1;
  for (int a = 0; a < n; ++a) count *= static_cast<std::size_t>(res);

  std::vector<Vec> ps(count);
  std::vector<HamiltonianDerivatives> H(count);
  std::vector<double> fd_defect(count);
  ctx.timed("hamiltonian", [&] {
    for_each_index(count, Execution::parallel, [&](std::size_t i) {
      Vec p(n);
      std::size_t rest = i;
      for (int a = 0; a < n; ++a) {
        const int k = static_cast<int>(rest % static_cast<std::size_t>(res));
        rest /= static_cast<std::size_t>(res);
        p[a] = -cfg.p_radius + 2.0 * cfg.p_radius * k / (res - 1);
      }
      ps[i] = p;
      H[i] = cov.model.derivatives(p, 2);
      // D2H against central differences of DH = argmin.
      const double h = 1e-5;
      Mat fd(n, n);
      for (int k = 0; k < n; ++k) {
        Vec e = Vec::Zero(n);
        e[k] = h;
        fd.col(k) = (cov.model.minimizer(p + e, H[i].minimizer) - cov.model.minimizer(p - e, H[i].minimizer)) / (2 * h);
      }
      fd_defect[i] = (fd - H[i].hessian).norm() / std::max(1.0, H[i].hessian.norm());
    });
    return 0;
  });

  CsvTable table(concat(names("p", n), std::vector<std::string>{"H"}, names("DH", n), names("u", n),
                        matrix_names("D2H", n, n), std::vector<std::string>{"max_eig_D2H", "fd_defect"}));
  double worst_eig = -std::numeric_limits<double>::infinity(), worst_defect = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> row;
    append(row, ps[i]);
    row.push_back(H[i].value);
    append(row, H[i].gradient);
    append(row, H[i].minimizer);
    append_rowmajor(row, H[i].hessian);
    const double eig = Eigen::SelfAdjointEigenSolver<Mat>(H[i].hessian).eigenvalues().maxCoeff();
    const double defect = fd_defect[i];
    row.push_back(eig);
    row.push_back(defect);
    worst_eig = std::max(worst_eig, eig);
    worst_defect = std::max(worst_defect, defect);
    table.add_row(row);
  }
  ctx.write("hmodel.csv", table);
  ctx.summary = {{"points", count},
                 {"p_radius", cfg.p_radius},
                 {"max_eigenvalue_D2H", worst_eig},
                 {"concave", worst_eig < 0.0},
                 {"max_fd_defect", worst_defect}};
}

// Omega zeros from multistart, plus traced curves when tracing is on.
std::vector<OmegaPoint> omega_points(Context& ctx, const CovProblem& cov, std::size_t& multistart) {
  const RunConfig& cfg = ctx.cfg;
  auto points = ctx.timed("omega_solve", [&] { return omega_solve(cov, cfg.omega); });
  multistart = points.size();
  if (cfg.trace) {
    auto traced = ctx.timed("omega_trace", [&] { return omega_trace(cov, points, cfg.omega, cfg.trace_step); });
    points.insert(points.end(), traced.begin(), traced.end());
  }
  return points;
}

double kernel_identity_residual(const CovProblem& cov, const OmegaPoint& pt) {
  const Jet psi = cov.terminal->jet(pt.z, 2);
  const HamiltonianDerivatives H = cov.model.derivatives(psi.grad, 2);
  return (psi.hess * pt.v - H.hessian.partialPivLu().solve(pt.v) / cov.horizon).norm();
}

void run_omega(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const CovProblem& cov = require_cov(cfg, "omega");
  const int n = cov.dim();
  std::size_t multistart = 0;
  const auto points = omega_points(ctx, cov, multistart);

  const int k = points.empty() ? 0 : static_cast<int>(points.front().jacobian_singular_values.size());
  CsvTable table(concat(names("z", n), names("v", n), std::vector<std::string>{"residual"}, names("sv", k),
                        std::vector<std::string>{"transversal", "traced"}, names("image", n)));
  std::size_t transversal = 0;
  double kernel_worst = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const OmegaPoint& pt = points[i];
    std::vector<double> row;
    append(row, pt.z);
    append(row, pt.v);
    row.push_back(pt.residual);
    append(row, pt.jacobian_singular_values);
    row.push_back(pt.transversal ? 1.0 : 0.0);
    row.push_back(i >= multistart ? 1.0 : 0.0);
    append(row, pt.conjugate_image);
    table.add_row(row);
    transversal += pt.transversal;
    kernel_worst = std::max(kernel_worst, kernel_identity_residual(cov, pt));
    ctx.markers.push_back({pt.z, !pt.transversal});
  }
  ctx.write("omega.csv", table);

  double separation = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < multistart; ++i)
    for (std::size_t j = i + 1; j < multistart; ++j)
      separation = std::min(separation, (points[i].z - points[j].z).norm());
  ctx.summary = {{"zeros", multistart},
                 {"traced", points.size() - multistart},
                 {"transversal", transversal},
                 {"all_transversal", transversal == points.size()},
                 {"kernel_identity_max", kernel_worst}};
  if (std::isfinite(separation)) ctx.summary["min_separation"] = separation;
}

void run_perturb(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const CovProblem& cov = require_cov(cfg, "perturb");
  const GenericityReport r = ctx.timed("genericity", [&] { return genericity_experiment(cov, cfg.genericity); });
  CsvTable table({"trial", "theta_norm", "zeros", "non_transversal", "success"});
  for (const auto& t : r.trials)
    table.add_row(std::vector<double>{static_cast<double>(t.index), t.theta_norm, static_cast<double>(t.zeros),
                                      static_cast<double>(t.non_transversal), t.success ? 1.0 : 0.0});
  ctx.write("perturb.csv", table);
  json anchors = json::array();
  for (const auto& a : r.anchors) anchors.push_back(to_json(a));
  ctx.summary = {{"trials", r.trials.size()},
                 {"success_fraction", r.success_fraction},
                 {"baseline_zeros", r.baseline_zeros},
                 {"baseline_non_transversal", r.baseline_non_transversal},
                 {"anchors", anchors},
                 {"seed", cfg.genericity.seed}};
}

void run_boxcount(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const CovProblem& cov = require_cov(cfg, "boxcount");
  const int n = cov.dim();
  std::size_t multistart = 0;
  const auto points = omega_points(ctx, cov, multistart);
  const BoxCount bc = conjugate_image_boxcount(points, cfg.epsilons);

  CsvTable counts({"epsilon", "count"});
  json list = json::array();
  for (std::size_t i = 0; i < bc.epsilons.size(); ++i) {
    counts.add_row(std::vector<double>{bc.epsilons[i], static_cast<double>(bc.counts[i])});
    list.push_back(bc.counts[i]);
  }
  ctx.write("boxcount.csv", counts);
  CsvTable images(names("image", n));
  for (const auto& pt : points) {
    images.add_row(std::vector<double>(pt.conjugate_image.data(), pt.conjugate_image.data() + n));
    ctx.markers.push_back({pt.z, false});
  }
  ctx.write("images.csv", images);
  ctx.summary = {{"points", points.size()},
                 {"traced", points.size() - multistart},
                 {"epsilons", cfg.epsilons},
                 {"counts", list},
                 {"slope", bc.slope},
                 {"expected_dimension", std::max(0, n - 2)}};
}

void write_plot(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const int n = cfg.spec.n;
  if (n > 3) throw ConfigError("/problem/n", "--plot supports n <= 3");
  const DetGrid grid = ctx.timed("plot_grid", [&] {
    return det_grid(cfg.spec, cfg.scan_box, cfg.numerics.resolution, cfg.conjugate_options());
  });
  CsvTable table(concat(names("z", n), std::vector<std::string>{"det", "sigma_min"}));
  for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
    std::vector<double> row;
    append(row, grid.nodes[i]);
    row.push_back(grid.det[i]);
    row.push_back(grid.sigma_min[i]);
    table.add_row(row);
  }
  ctx.write("det_grid.csv", table);
  if (n == 2) {
    std::ofstream svg(ctx.out / "det_contour.svg", std::ios::binary);
    svg << det_contour_svg(grid, ctx.markers);
    ctx.files.push_back("det_contour.svg");
  }
}

const std::map<std::string, std::function<void(Context&)>>& commands() {
  static const std::map<std::string, std::function<void(Context&)>> table = {
      {"solve", run_solve},   {"sens", run_sens},   {"scan", run_scan},
      {"kappa", run_kappa},   {"oracle", run_oracle}, {"hmodel", run_hmodel},
      {"omega", run_omega},   {"perturb", run_perturb}, {"boxcount", run_boxcount}};
  return table;
}

json tolerances(const RunConfig& cfg) {
  const Numerics& num = cfg.numerics;
  return {{"steps", num.steps},
          {"newton_tolerance", num.newton_tolerance},
          {"singular_ratio", num.singular_ratio},
          {"coarse_ratio", num.coarse_ratio},
          {"refine_tolerance", num.refine_tolerance},
          {"fd_step", num.fd_step},
          {"kappa_tolerance", kKappaTolerance},
          {"omega_accept_residual", cfg.omega.accept_residual},
          {"omega_dedup_distance", cfg.omega.dedup_distance},
          {"transversality_ratio", cfg.omega.transversality_ratio},
          {"transversality_step", cfg.omega.transversality_step},
          {"det_method", num.det_method == DetMethod::closed_form ? "closed_form" : "pontryagin"}};
}

int thread_request(const RunFlags& flags) {
  if (flags.threads) return *flags.threads;
  if (const char* env = std::getenv("CONJPT_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return static_cast<int>(n);
  }
  return 0;
}

std::string hex(std::uint64_t h) {
  char buffer[20];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(h));
  return buffer;
}

}  // namespace

std::vector<std::string> command_names() {
  std::vector<std::string> out;
  for (const auto& [name, fn] : commands()) out.push_back(name);
  return out;
}

int run(const std::string& command, const std::filesystem::path& config_path,
        const std::filesystem::path& output_dir, const RunFlags& flags, std::ostream& err) {
  const auto it = commands().find(command);
  if (it == commands().end()) {
    err << "conjpt: unknown command '" << command << "'\n";
    return 1;
  }
  try {
    const auto start = Clock::now();
    const RunConfig cfg = load_config(config_path);
    set_thread_count(thread_request(flags));
    std::filesystem::create_directories(output_dir);

    Context ctx{cfg, output_dir, flags};
    it->second(ctx);
    if (flags.plot) write_plot(ctx);
    ctx.timings["total"] = std::chrono::duration<double>(Clock::now() - start).count();

    json result = {
        {"schema", kSchemaVersion},
        {"command", command},
        {"problem", {{"name", cfg.problem_name}, {"n", cfg.spec.n}, {"m", cfg.spec.m}, {"T", cfg.spec.horizon}}},
        {"versions",
         {{"conjpt", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
        {"config", {{"path", config_path.string()}, {"fnv1a64", hex(cfg.hash)}}},
        {"tolerances", tolerances(cfg)},
        {"threads", thread_count()},
        {"timings_seconds", ctx.timings},
        {"outputs", ctx.files},
        {"summary", ctx.summary}};
    std::ofstream out(output_dir / "result.json", std::ios::binary);
    out << result.dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + (output_dir / "result.json").string());
    return 0;
  } catch (const ConfigError& e) {
    err << "conjpt: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    err << "conjpt: numerical failure in " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    err << "conjpt: numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const InvariantError& e) {
    err << "conjpt: internal invariant violated: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    err << "conjpt: config error at /: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "conjpt: internal error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace conjpt::cli
