#include "conjpt/conjugate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "conjpt/errors.hpp"

namespace conjpt {

namespace {

const CovProblem& require_cov(const ConjugateOptions& options) {
  if (!options.cov) throw std::invalid_argument("closed-form method needs a calculus-of-variations problem");
  return *options.cov;
}

}  // namespace

DetResult det_xz(const ProblemSpec& spec, const Vec& z, const ConjugateOptions& options) {
  DetResult out;
  if (options.method == DetMethod::closed_form) {
    const ClosedForms cf = closed_forms(require_cov(options), z);
    out.x_z = cf.x_z;
    out.x0 = cf.x0;
  } else {
    const ExtremalTrajectory tr = solve_extremal(spec, z, options.steps);
    const SensitivityBundle b = solve_variational(spec, tr);
    out.x_z = b.x_z.front();
    out.x0 = tr.x.front();
  }
  const Eigen::JacobiSVD<Mat> svd(out.x_z, Eigen::ComputeFullV);
  const Vec& sv = svd.singularValues();
  const auto n = sv.size();
  out.det = out.x_z.determinant();
  out.sigma_max = sv[0];
  out.sigma_min = sv[n - 1];
  out.v = canonical_direction(svd.matrixV().col(n - 1));
  return out;
}

ScanBox ScanBox::cube(int n, double radius) { return {Vec::Constant(n, -radius), Vec::Constant(n, radius)}; }

namespace {

struct Grid {
  int n;
  int resolution;
  std::vector<std::size_t> stride;
  std::size_t size;

  Grid(int dim, int res) : n(dim), resolution(res), stride(static_cast<std::size_t>(dim)), size(1) {
    for (int a = 0; a < n; ++a) {
      stride[static_cast<std::size_t>(a)] = size;
      size *= static_cast<std::size_t>(res);
    }
  }
  int coordinate(std::size_t flat, int axis) const {
    return static_cast<int>((flat / stride[static_cast<std::size_t>(axis)]) % static_cast<std::size_t>(resolution));
  }
  Vec point(const ScanBox& box, std::size_t flat) const {
    Vec z(n);
    for (int a = 0; a < n; ++a)
      z[a] = box.lower[a] + (box.upper[a] - box.lower[a]) * coordinate(flat, a) / (resolution - 1);
    return z;
  }
};

void check_scan_arguments(const ProblemSpec& spec, const ScanBox& box, int resolution) {
  if (resolution < 2) throw std::invalid_argument("scan: resolution must be at least 2 per axis");
  if (spec.n > 3) throw std::invalid_argument("scan: dense scans support n <= 3");
  if (box.lower.size() != spec.n || box.upper.size() != spec.n)
    throw std::invalid_argument("scan: box dimension does not match the problem");
  for (int a = 0; a < spec.n; ++a)
    if (!(box.lower[a] < box.upper[a])) throw std::invalid_argument("scan: box must have lower < upper on every axis");
}

std::optional<DetResult> try_det(const ProblemSpec& spec, const Vec& z, const ConjugateOptions& options) {
  try {
    return det_xz(spec, z, options);
  } catch (const NumericalError&) {
    return std::nullopt;
  }
}

struct Refined {
  Vec z;
  DetResult det;
};

// Safeguarded secant (Illinois) on det along the segment a -> b.
std::optional<Refined> refine_bracket(const ProblemSpec& spec, const Vec& a, const Vec& b, double fa, double fb,
                                      double target, const ConjugateOptions& options) {
  double lo = 0.0, hi = 1.0, flo = fa, fhi = fb;
  int last_side = 0;
  std::optional<Refined> best;
  for (int it = 0; it < 100; ++it) {
    double s = (lo * fhi - hi * flo) / (fhi - flo);
    if (!(s > lo && s < hi)) s = 0.5 * (lo + hi);
    const Vec z = a + s * (b - a);
    const auto d = try_det(spec, z, options);
    if (!d) return best;
    if (!best || std::abs(d->det) < std::abs(best->det.det)) best = Refined{z, *d};
    const double fs = d->det;
    if (std::abs(fs) <= target || hi - lo <= 1e-15) break;
    if ((fs < 0.0) == (flo < 0.0)) {
      lo = s;
      flo = fs;
      if (last_side == -1) fhi *= 0.5;
      last_side = -1;
    } else {
      hi = s;
      fhi = fs;
      if (last_side == 1) flo *= 0.5;
      last_side = 1;
    }
  }
  return best;
}

// Coordinate-wise golden-section minimization of sigma_min within one cell.
std::optional<Refined> refine_minimum(const ProblemSpec& spec, const Vec& start, const Vec& cell,
                                      const ConjugateOptions& options) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  Vec z = start;
  auto sigma = [&](const Vec& p) {
    const auto d = try_det(spec, p, options);
    return d ? d->sigma_min : std::numeric_limits<double>::infinity();
  };
  for (int sweep = 0; sweep < 3; ++sweep)
    for (Eigen::Index a = 0; a < z.size(); ++a) {
      double lo = z[a] - cell[a], hi = z[a] + cell[a];
      auto at = [&](double t) {
        Vec p = z;
        p[a] = t;
        return sigma(p);
      };
      double c = hi - invphi * (hi - lo), d = lo + invphi * (hi - lo);
      double fc = at(c), fd = at(d);
      for (int it = 0; it < 60 && hi - lo > 1e-13 * (1.0 + std::abs(z[a])); ++it) {
        if (fc < fd) {
          hi = d;
          d = c;
          fd = fc;
          c = hi - invphi * (hi - lo);
          fc = at(c);
        } else {
          lo = c;
          c = d;
          fc = fd;
          d = lo + invphi * (hi - lo);
          fd = at(d);
        }
      }
      const double t = 0.5 * (lo + hi);
      if (at(t) <= sigma(z)) z[a] = t;
    }
  const auto d = try_det(spec, z, options);
  if (!d) return std::nullopt;
  return Refined{z, *d};
}

}  // namespace

DetGrid det_grid(const ProblemSpec& spec, const ScanBox& box, int resolution, const ConjugateOptions& options) {
  check_scan_arguments(spec, box, resolution);
  const Grid grid(spec.n, resolution);
  DetGrid out;
  out.box = box;
  out.resolution = resolution;
  out.nodes.resize(grid.size);
  out.det.assign(grid.size, std::numeric_limits<double>::quiet_NaN());
  out.sigma_min.assign(grid.size, std::numeric_limits<double>::quiet_NaN());
  out.sigma_max.assign(grid.size, std::numeric_limits<double>::quiet_NaN());
  for_each_index(grid.size, options.execution, [&](std::size_t i) {
    out.nodes[i] = grid.point(box, i);
    if (const auto d = try_det(spec, out.nodes[i], options)) {
      out.det[i] = d->det;
      out.sigma_min[i] = d->sigma_min;
      out.sigma_max[i] = d->sigma_max;
    }
  });
  return out;
}

std::vector<ConjugateCandidate> scan(const ProblemSpec& spec, const ScanBox& box, int resolution,
                                     const ConjugateOptions& options) {
  const DetGrid g = det_grid(spec, box, resolution, options);
  const Grid grid(spec.n, resolution);
  const int n = spec.n;

  double scale = 1.0;
  for (double d : g.det)
    if (std::isfinite(d)) scale = std::max(scale, std::abs(d));
  const double target = options.refine_tolerance * scale;

  struct Job {
    std::size_t a;
    std::size_t b;  // == a for node jobs
    bool bracket;
  };
  std::vector<Job> jobs;
  std::vector<bool> on_sign_change(grid.size, false);
  for (std::size_t i = 0; i < grid.size; ++i)
    for (int ax = 0; ax < n; ++ax) {
      if (grid.coordinate(i, ax) + 1 >= resolution) continue;
      const std::size_t j = i + grid.stride[static_cast<std::size_t>(ax)];
      if (g.det[i] * g.det[j] < 0.0) {
        jobs.push_back({i, j, true});
        on_sign_change[i] = on_sign_change[j] = true;
      }
    }
  for (std::size_t i = 0; i < grid.size; ++i) {
    if (!std::isfinite(g.det[i]) || on_sign_change[i]) continue;
    if (g.det[i] == 0.0 || g.sigma_min[i] <= options.coarse_ratio * std::max(1.0, g.sigma_max[i])) jobs.push_back({i, i, false});
  }

  Vec cell(n);
  for (int a = 0; a < n; ++a) cell[a] = (box.upper[a] - box.lower[a]) / (resolution - 1);

  std::vector<std::optional<Refined>> refined(jobs.size());
  for_each_index(jobs.size(), options.execution, [&](std::size_t k) {
    const Job& job = jobs[k];
    if (job.bracket) {
      refined[k] = refine_bracket(spec, g.nodes[job.a], g.nodes[job.b], g.det[job.a], g.det[job.b], target, options);
    } else if (g.det[job.a] == 0.0) {
      refined[k] = Refined{g.nodes[job.a], det_xz(spec, g.nodes[job.a], options)};
    } else {
      refined[k] = refine_minimum(spec, g.nodes[job.a], cell, options);
    }
  });

  const double diameter = (box.upper - box.lower).norm();
  std::vector<ConjugateCandidate> out;
  for (const auto& r : refined) {
    if (!r) continue;
    ConjugateCandidate c;
    c.z = r->z;
    c.x0 = r->det.x0;
    c.sigma_min = r->det.sigma_min;
    c.v = r->det.v;
    c.det_value = r->det.det;
    c.accepted = r->det.sigma_min <= options.singular_ratio * std::max(1.0, r->det.sigma_max);
    if (!c.accepted) continue;
    const bool duplicate = std::any_of(out.begin(), out.end(), [&](const ConjugateCandidate& o) {
      return (o.z - c.z).norm() <= 1e-9 * (1.0 + diameter);
    });
    if (!duplicate) out.push_back(std::move(c));
  }
  if (options.compute_kappa)
    for_each_index(out.size(), options.execution,
                   [&](std::size_t i) { out[i].kappa = necessary_condition(spec, out[i], options); });
  return out;
}

double necessary_condition(const ProblemSpec& spec, const ConjugateCandidate& candidate,
                           const ConjugateOptions& options) {
  const Vec& v = candidate.v;
  if (options.method == DetMethod::closed_form) {
    const ClosedForms cf = closed_forms(require_cov(options), candidate.z, v);
    return (cf.p_z * v).dot(*cf.x_zz_vv);
  }
  const ExtremalTrajectory tr = solve_extremal(spec, candidate.z, options.steps);
  const SensitivityBundle b = solve_variational(spec, tr, v);
  return (b.p_z.front() * v).dot(b.xzz_vv.front());
}

}  // namespace conjpt
