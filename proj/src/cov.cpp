#include "conjpt/cov.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>

#include "conjpt/cutoff.hpp"
#include "conjpt/errors.hpp"
#include "conjpt/finite_difference.hpp"

namespace conjpt {

HamiltonianModel::HamiltonianModel(FunctionPtr lagrangian, NewtonOptions newton)
    : lagrangian_(std::move(lagrangian)), newton_(newton) {
  if (!lagrangian_) throw std::invalid_argument("HamiltonianModel: null Lagrangian");
}

Vec HamiltonianModel::minimizer(const Vec& p, const Vec& guess) const {
  const int n = dim();
  if (p.size() != n) throw std::invalid_argument("HamiltonianModel::minimizer: dimension mismatch");
  return damped_newton_minimize([&](const Vec& w) { return lagrangian_->jet(w, 2); },
                                [&](const Vec& w) { return lagrangian_->value(w); }, p,
                                guess.size() == n && guess.allFinite() ? guess : Vec::Zero(n),
                                newton_.tolerance * std::max(1.0, p.norm()), newton_.max_iterations,
                                "legendre_minimizer", p);
}

HamiltonianDerivatives HamiltonianModel::derivatives(const Vec& p, int order) const {
  const int n = dim();
  HamiltonianDerivatives out;
  out.minimizer = minimizer(p);
  const Jet L = lagrangian_->jet(out.minimizer, order >= 3 ? 3 : 2);
  out.value = L.value + p.dot(out.minimizer);
  out.gradient = out.minimizer;
  out.lagrangian_hessian = L.hess;
  const Eigen::LDLT<Mat> ldlt(L.hess);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-14)
    throw NumericalError("hamiltonian_derivatives", "L_uu is singular", to_std_vector(p));
  out.hessian = -ldlt.solve(Mat::Identity(n, n));
  out.hessian = 0.5 * (out.hessian + out.hessian.transpose());
  if (order >= 3) {
    const Mat& M = out.hessian;
    // Contract one slot at a time: A(a,b,k) = sum_c L_abc M_ck, then B(a,j,k), then the last slot.
    Tensor3 A(n), B(n);
    out.third = Tensor3(n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int k = 0; k < n; ++k) {
          double s = 0.0;
          for (int c = 0; c < n; ++c) s += L.third(a, b, c) * M(c, k);
          A(a, b, k) = s;
        }
    for (int a = 0; a < n; ++a)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double s = 0.0;
          for (int b = 0; b < n; ++b) s += A(a, b, k) * M(b, j);
          B(a, j, k) = s;
        }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double s = 0.0;
          for (int a = 0; a < n; ++a) s += M(i, a) * B(a, j, k);
          out.third(i, j, k) = s;
        }
  }
  return out;
}

Vec legendre_minimizer(const HamiltonianModel& model, const Vec& p) { return model.minimizer(p); }

HamiltonianDerivatives hamiltonian_derivatives(const HamiltonianModel& model, const Vec& p) {
  return model.derivatives(p, 3);
}

ProblemSpec CovProblem::to_problem_spec() const {
  return make_calculus_of_variations_problem(model.lagrangian_ptr(), terminal, horizon);
}

// ---------------------------------------------------------------------------

ClosedForms closed_forms(const CovProblem& problem, const Vec& z, const std::optional<Vec>& v) {
  const int n = problem.dim();
  if (z.size() != n || (v && v->size() != n)) throw std::invalid_argument("closed_forms: dimension mismatch");
  const double T = problem.horizon;
  const Jet psi = problem.terminal->jet(z, v ? 3 : 2);
  const HamiltonianDerivatives H = problem.model.derivatives(psi.grad, v ? 3 : 2);

  ClosedForms out;
  out.x0 = z - T * H.gradient;
  out.x_z = Mat::Identity(n, n) - T * H.hessian * psi.hess;
  out.p_z = psi.hess;
  if (v) {
    const Vec a = psi.hess * *v;
    out.x_zz_vv = Vec(-T * (H.hessian * psi.third.contract(*v, *v)) - T * H.third.contract(a, a));
  }
  return out;
}

Vec phi(const CovProblem& problem, const Vec& z, const Vec& v) {
  const int n = problem.dim();
  if (z.size() != n || v.size() != n) throw std::invalid_argument("phi: dimension mismatch");
  const double T = problem.horizon;
  const Jet psi = problem.terminal->jet(z, 3);
  const HamiltonianDerivatives H = problem.model.derivatives(psi.grad, 3);
  const Mat x_z = Mat::Identity(n, n) - T * H.hessian * psi.hess;
  const Vec a = psi.hess * v;
  const Vec x_zz = -T * (H.hessian * psi.third.contract(v, v)) - T * H.third.contract(a, a);
  Vec out(n + 1);
  out.head(n) = x_z * v;
  // D2H^{-1} = -L_uu at the minimizer.
  out[n] = -(H.lagrangian_hessian * v).dot(x_zz);
  return out;
}

Vec canonical_direction(const Vec& v) {
  Eigen::Index i = 0;
  v.cwiseAbs().maxCoeff(&i);
  return v[i] < 0.0 ? Vec(-v) : v;
}

// ---------------------------------------------------------------------------

namespace {

// Orthonormal basis of the tangent space v-perp, n x (n-1).
Mat tangent_basis(const Vec& v) {
  const int n = static_cast<int>(v.size());
  const Eigen::HouseholderQR<Mat> qr{Mat(v)};
  const Mat Q = qr.householderQ() * Mat::Identity(n, n);
  return Q.rightCols(n - 1);
}

std::vector<Vec> half_sphere_directions(int n, int directions) {
  std::vector<Vec> out;
  if (n == 1) {
    out.push_back(Vec::Ones(1));
    return out;
  }
  const int half = std::max(1, directions / 2);
  if (n == 2) {
    for (int j = 0; j < half; ++j) {
      const double a = std::numbers::pi * j / half;
      out.push_back((Vec(2) << std::cos(a), std::sin(a)).finished());
    }
    return out;
  }
  if (n == 3) {
    // Fibonacci lattice on the upper hemisphere.
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int j = 0; j < half; ++j) {
      const double zc = 1.0 - (j + 0.5) / half;
      const double r = std::sqrt(std::max(0.0, 1.0 - zc * zc));
      out.push_back((Vec(3) << r * std::cos(golden * j), r * std::sin(golden * j), zc).finished());
    }
    return out;
  }
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int j = 0; j < half; ++j) {
    Vec d(n);
    for (int i = 0; i < n; ++i) d[i] = normal(rng);
    out.push_back(canonical_direction(d.normalized()));
  }
  return out;
}

}  // namespace

std::vector<OmegaSeed> omega_seeds(int n, const OmegaOptions& options) {
  if (n < 1) throw std::invalid_argument("omega_seeds: dimension must be positive");
  if (options.seeds_per_axis < 1) throw std::invalid_argument("omega_seeds: need at least one seed per axis");
  const int S = options.seeds_per_axis;
  const double k = options.box_radius;
  std::vector<Vec> points;
  std::vector<int> idx(static_cast<std::size_t>(n), 0);
  while (true) {
    Vec z(n);
    for (int i = 0; i < n; ++i) z[i] = S == 1 ? 0.0 : -k + 2.0 * k * idx[static_cast<std::size_t>(i)] / (S - 1);
    if (z.norm() <= k * (1.0 + 1e-12)) points.push_back(z);
    int pos = 0;
    while (pos < n && ++idx[static_cast<std::size_t>(pos)] == S) idx[static_cast<std::size_t>(pos++)] = 0;
    if (pos == n) break;
  }
  const auto dirs = half_sphere_directions(n, options.directions);
  std::vector<OmegaSeed> seeds;
  seeds.reserve(points.size() * dirs.size());
  for (const auto& z : points)
    for (const auto& v : dirs) seeds.push_back({z, v});
  return seeds;
}

OmegaPoint omega_newton(const CovProblem& problem, const OmegaSeed& seed, const OmegaOptions& options) {
  const int n = problem.dim();
  Vec z = seed.z;
  Vec v = seed.v.normalized();
  Vec F = phi(problem, z, v);
  double r = F.norm();
  const double h = options.gn_step;

  for (int it = 0; it < options.max_iterations && r > 1e-14; ++it) {
    const Mat B = tangent_basis(v);
    const int cols = 2 * n - 1;
    Mat J(n + 1, cols);
    for (int i = 0; i < n; ++i) {
      Vec zp = z, zm = z;
      zp[i] += h;
      zm[i] -= h;
      J.col(i) = (phi(problem, zp, v) - phi(problem, zm, v)) / (2.0 * h);
    }
    for (int k = 0; k < n - 1; ++k) {
      const Vec vp = (v + h * B.col(k)).normalized();
      const Vec vm = (v - h * B.col(k)).normalized();
      J.col(n + k) = (phi(problem, z, vp) - phi(problem, z, vm)) / (2.0 * h);
    }
    // Minimum-norm least-squares step.
    const Vec delta = J.completeOrthogonalDecomposition().solve(-F);
    if (!delta.allFinite()) break;
    double t = 1.0;
    bool improved = false;
    for (int k = 0; k < 20; ++k) {
      const Vec zc = z + t * delta.head(n);
      const Vec vc = n > 1 ? Vec((v + B * (t * delta.tail(n - 1))).normalized()) : v;
      const Vec Fc = phi(problem, zc, vc);
      if (Fc.allFinite() && Fc.norm() < r) {
        z = zc;
        v = vc;
        F = Fc;
        improved = r - Fc.norm() > 1e-15 * r;
        r = Fc.norm();
        break;
      }
      t *= 0.5;
    }
    if (!improved) break;
    if (z.norm() > 2.0 * options.box_radius) break;
  }
  OmegaPoint out;
  out.z = z;
  out.v = v;
  out.residual = r;
  return out;
}

namespace {

// Jacobian of Phi restricted to R^n x T_v S^{n-1} (basis B), fourth-order differences.
Mat restricted_jacobian(const CovProblem& problem, const Vec& z, const Vec& v, const Mat& B, double step) {
  const int n = problem.dim();
  Mat J(n + 1, 2 * n - 1);
  for (int i = 0; i < n; ++i) {
    Vec e = Vec::Zero(n);
    e[i] = 1.0;
    J.col(i) = fd::derivative([&](double t) { return phi(problem, Vec(z + t * e), v); }, step);
  }
  for (int k = 0; k < n - 1; ++k)
    J.col(n + k) =
        fd::derivative([&](double t) { return phi(problem, z, Vec((v + t * B.col(k)).normalized())); }, step);
  return J;
}

}  // namespace

OmegaPoint transversality_check(const CovProblem& problem, OmegaPoint point, const OmegaOptions& options) {
  const int n = problem.dim();
  const Mat J = restricted_jacobian(problem, point.z, point.v, tangent_basis(point.v), options.transversality_step);
  point.jacobian_singular_values = Eigen::JacobiSVD<Mat>(J).singularValues();
  const Vec& sv = point.jacobian_singular_values;
  point.transversal = J.cols() >= n + 1 && sv[0] > 0.0 && sv[n] > options.transversality_ratio * sv[0];
  point.conjugate_image = closed_forms(problem, point.z).x0;
  return point;
}

std::vector<OmegaPoint> omega_trace(const CovProblem& problem, const std::vector<OmegaPoint>& points,
                                    const OmegaOptions& options, double step, int max_steps) {
  const int n = problem.dim();
  if (n != 3) throw std::invalid_argument("omega_trace: zero curves are traced for n = 3 only");
  if (!(step > 0.0) || max_steps < 1) throw std::invalid_argument("omega_trace: step and max_steps must be positive");

  std::vector<OmegaPoint> traced;
  // Ambient coordinates (z, v) in R^6; v and -v describe the same zero.
  auto ambient = [](const OmegaPoint& p) {
    Vec a(6);
    a << p.z, canonical_direction(p.v);
    return a;
  };
  auto covered = [&](const OmegaPoint& p) {
    const Vec a = ambient(p);
    return std::any_of(traced.begin(), traced.end(),
                       [&](const OmegaPoint& q) { return (ambient(q) - a).norm() < 2.0 * step; });
  };
  // Unit tangent of the zero curve in ambient coordinates, empty if the
  // restricted Jacobian does not have a one-dimensional kernel.
  auto tangent = [&](const Vec& z, const Vec& v) -> std::optional<Vec> {
    const Mat B = tangent_basis(v);
    const Mat J = restricted_jacobian(problem, z, v, B, options.transversality_step);
    const Eigen::JacobiSVD<Mat> svd(J, Eigen::ComputeFullV);
    const Vec& sv = svd.singularValues();
    if (!(sv[n] > options.transversality_ratio * sv[0])) return std::nullopt;
    const Vec k = svd.matrixV().col(2 * n - 2);
    Vec t(6);
    t << k.head(n), B * k.tail(n - 1);
    return t.normalized();
  };

  for (const OmegaPoint& start : points) {
    if (!start.transversal || covered(start)) continue;
    traced.push_back(transversality_check(problem, start, options));
    const Vec origin = ambient(start);
    for (double sense : {1.0, -1.0}) {
      Vec z = start.z;
      Vec v = start.v;
      auto t0 = tangent(z, v);
      if (!t0) break;
      Vec dir = sense * *t0;
      for (int s = 0; s < max_steps; ++s) {
        const Vec zp = z + step * dir.head(n);
        const Vec vp = (v + step * dir.tail(n)).normalized();
        OmegaPoint next = omega_newton(problem, {zp, vp}, options);
        if (next.residual > options.accept_residual || next.z.norm() > options.box_radius) break;
        if ((next.z - z).norm() + (next.v - v).norm() > 3.0 * step) break;
        const auto t = tangent(next.z, next.v);
        if (!t) break;
        dir = t->dot(dir) >= 0.0 ? *t : Vec(-*t);
        z = next.z;
        v = next.v;
        next.v = canonical_direction(next.v);
        next = transversality_check(problem, std::move(next), options);
        traced.push_back(std::move(next));
        // Closed curve.
        if (s > 2 && (ambient(traced.back()) - origin).norm() < 0.5 * step) break;
      }
    }
  }
  return traced;
}

std::vector<OmegaPoint> omega_solve(const CovProblem& problem, const OmegaOptions& options,
                                    const std::vector<OmegaSeed>& seeds) {
  const int n = problem.dim();
  std::vector<std::optional<OmegaPoint>> found(seeds.size());
  for_each_index(seeds.size(), options.execution, [&](std::size_t i) {
    try {
      OmegaPoint pt = omega_newton(problem, seeds[i], options);
      if (pt.residual <= options.accept_residual && pt.z.norm() <= options.box_radius) found[i] = std::move(pt);
    } catch (const NumericalError&) {
    }
  });

  std::vector<OmegaPoint> kept;
  for (auto& f : found) {
    if (!f) continue;
    f->v = canonical_direction(f->v);
    const bool duplicate = std::any_of(kept.begin(), kept.end(), [&](const OmegaPoint& q) {
      return std::sqrt((q.z - f->z).squaredNorm() + (q.v - f->v).squaredNorm()) < options.dedup_distance;
    });
    if (!duplicate) kept.push_back(std::move(*f));
  }
  std::sort(kept.begin(), kept.end(), [n](const OmegaPoint& a, const OmegaPoint& b) {
    for (int i = 0; i < n; ++i)
      if (a.z[i] != b.z[i]) return a.z[i] < b.z[i];
    return false;
  });
  for_each_index(kept.size(), options.execution,
                 [&](std::size_t i) { kept[i] = transversality_check(problem, std::move(kept[i]), options); });
  return kept;
}

std::vector<OmegaPoint> omega_solve(const CovProblem& problem, const OmegaOptions& options) {
  return omega_solve(problem, options, omega_seeds(problem.dim(), options));
}

// ---------------------------------------------------------------------------

PerturbedFunction::PerturbedFunction(FunctionPtr base, PerturbationParams params)
    : base_(std::move(base)), params_(std::move(params)) {
  if (!base_) throw std::invalid_argument("perturb_psi: null base function");
  const int n = base_->dim();
  const std::size_t count = params_.anchors.size();
  if (!params_.quadratic.empty() && params_.quadratic.size() != count)
    throw std::invalid_argument("perturb_psi: one quadratic coefficient matrix per anchor");
  if (!params_.cubic.empty() && params_.cubic.size() != count)
    throw std::invalid_argument("perturb_psi: one cubic coefficient vector per anchor");
  for (std::size_t l = 0; l < count; ++l) {
    if (params_.anchors[l].size() != n || !params_.anchors[l].allFinite())
      throw std::invalid_argument("perturb_psi: anchors must be finite points of R^n");
    if (!params_.quadratic.empty() &&
        (params_.quadratic[l].rows() != n || params_.quadratic[l].cols() != n || !params_.quadratic[l].allFinite()))
      throw std::invalid_argument("perturb_psi: quadratic coefficients must be finite n x n");
    if (!params_.cubic.empty() && (params_.cubic[l].size() != n || !params_.cubic[l].allFinite()))
      throw std::invalid_argument("perturb_psi: cubic coefficients must be finite length n");
  }
}

Jet PerturbedFunction::jet(const Vec& z, int order) const {
  const int n = dim();
  Jet out = base_->jet(z, order);
  for (std::size_t l = 0; l < params_.anchors.size(); ++l) {
    const Vec d = z - params_.anchors[l];
    if (d.squaredNorm() >= 4.0) continue;
    const Mat Q = params_.quadratic.empty() ? Mat::Zero(n, n) : params_.quadratic[l];
    const Vec c = params_.cubic.empty() ? Vec::Zero(n) : params_.cubic[l];
    const Mat Qs = Q + Q.transpose();

    Jet poly = Jet::zeros(n, order);
    poly.value = d.dot(Q * d) + c.dot(d.cwiseProduct(d).cwiseProduct(d));
    if (order >= 1) poly.grad = Qs * d + 3.0 * c.cwiseProduct(d).cwiseProduct(d);
    if (order >= 2) {
      poly.hess = Qs;
      for (int a = 0; a < n; ++a) poly.hess(a, a) += 6.0 * c[a] * d[a];
    }
    if (order >= 3)
      for (int a = 0; a < n; ++a) poly.third(a, a, a) = 6.0 * c[a];
    out = sum(out, product(poly, smooth_cutoff_jet(d, order)));
  }
  return out;
}

FunctionPtr perturb_psi(FunctionPtr psi, PerturbationParams params) {
  return std::make_shared<PerturbedFunction>(std::move(psi), std::move(params));
}

GenericityReport genericity_experiment(const CovProblem& problem, const GenericityOptions& options) {
  if (options.trials < 0) throw std::invalid_argument("genericity_experiment: trials must be nonnegative");
  if (!(options.magnitude >= 0.0)) throw std::invalid_argument("genericity_experiment: magnitude must be nonnegative");
  const int n = problem.dim();

  GenericityReport report;
  const auto base = omega_solve(problem, options.omega);
  report.baseline_zeros = static_cast<int>(base.size());
  for (const auto& pt : base) report.baseline_non_transversal += pt.transversal ? 0 : 1;

  report.anchors = options.anchors;
  if (report.anchors.empty()) {
    for (const auto& pt : base)
      if (!pt.transversal) report.anchors.push_back(pt.z);
    if (report.anchors.empty())
      for (const auto& pt : base) report.anchors.push_back(pt.z);
    if (report.anchors.empty()) report.anchors.push_back(Vec::Zero(n));
  }
  const std::size_t A = report.anchors.size();
  const int per_anchor = options.kind == PerturbationKind::cubic ? n : n + n * n;
  const int dim_theta = static_cast<int>(A) * per_anchor;

  OmegaOptions inner = options.omega;
  if (options.execution == Execution::parallel) inner.execution = Execution::serial;

  report.trials.resize(static_cast<std::size_t>(options.trials));
  for_each_index(report.trials.size(), options.execution, [&](std::size_t t) {
    std::mt19937_64 rng(options.seed + t);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Vec theta(dim_theta);
    for (int i = 0; i < dim_theta; ++i) theta[i] = normal(rng);
    theta *= options.magnitude * std::pow(unif(rng), 1.0 / dim_theta) / theta.norm();

    PerturbationParams params;
    params.anchors = report.anchors;
    for (std::size_t l = 0; l < A; ++l) {
      const double* block = theta.data() + static_cast<Eigen::Index>(l) * per_anchor;
      params.cubic.push_back(Eigen::Map<const Vec>(block, n));
      if (options.kind == PerturbationKind::full) params.quadratic.push_back(Eigen::Map<const Mat>(block + n, n, n));
    }
    const CovProblem perturbed{problem.model, perturb_psi(problem.terminal, params), problem.horizon};
    const auto zeros = omega_solve(perturbed, inner);

    GenericityTrial& trial = report.trials[t];
    trial.index = static_cast<int>(t);
    trial.theta_norm = theta.norm();
    trial.zeros = static_cast<int>(zeros.size());
    for (const auto& pt : zeros) trial.non_transversal += pt.transversal ? 0 : 1;
    trial.success = trial.non_transversal == 0;
  });
  const auto successes = std::count_if(report.trials.begin(), report.trials.end(),
                                       [](const GenericityTrial& t) { return t.success; });
  report.success_fraction =
      report.trials.empty() ? 0.0 : static_cast<double>(successes) / static_cast<double>(report.trials.size());
  return report;
}

BoxCount conjugate_image_boxcount(const std::vector<OmegaPoint>& points, const std::vector<double>& epsilons) {
  BoxCount out;
  out.epsilons = epsilons;
  for (double eps : epsilons) {
    if (!(eps > 0.0)) throw std::invalid_argument("conjugate_image_boxcount: box sizes must be positive");
    std::set<std::vector<long long>> boxes;
    for (const auto& pt : points) {
      std::vector<long long> key(static_cast<std::size_t>(pt.conjugate_image.size()));
      for (Eigen::Index i = 0; i < pt.conjugate_image.size(); ++i)
        key[static_cast<std::size_t>(i)] = static_cast<long long>(std::floor(pt.conjugate_image[i] / eps));
      boxes.insert(std::move(key));
    }
    out.counts.push_back(boxes.size());
  }
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < epsilons.size(); ++i)
    if (out.counts[i] > 0) {
      xs.push_back(std::log(1.0 / epsilons[i]));
      ys.push_back(std::log(static_cast<double>(out.counts[i])));
    }
  if (xs.size() >= 2) {
    const double k = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sx += xs[i];
      sy += ys[i];
      sxx += xs[i] * xs[i];
      sxy += xs[i] * ys[i];
    }
    const double denom = k * sxx - sx * sx;
    if (denom > 0.0) out.slope = (k * sxy - sx * sy) / denom;
  }
  return out;
}

}  // namespace conjpt
