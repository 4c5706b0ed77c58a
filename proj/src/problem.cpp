#include "conjpt/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "conjpt/expr.hpp"

namespace conjpt {

VectorField::VectorField(std::vector<FunctionPtr> components) : components_(std::move(components)) {
  for (const auto& c : components_) {
    if (!c) throw std::invalid_argument("VectorField: null component");
    if (c->dim() != dim()) throw std::invalid_argument("VectorField: component dimension must equal field dimension");
  }
}

Vec VectorField::value(const Vec& x) const {
  Vec v(dim());
  for (int i = 0; i < dim(); ++i) v[i] = component(i).value(x);
  return v;
}

Mat VectorField::jacobian(const Vec& x) const {
  Mat J(dim(), dim());
  for (int i = 0; i < dim(); ++i) J.row(i) = component(i).gradient(x).transpose();
  return J;
}

VectorField unit_field(int n, int i) {
  std::vector<FunctionPtr> comps;
  for (int k = 0; k < n; ++k)
    comps.push_back(std::make_shared<ExpressionFunction>(expr::constant(k == i ? 1.0 : 0.0), n, 4));
  return VectorField(std::move(comps));
}

VectorField zero_field(int n) {
  std::vector<FunctionPtr> comps;
  for (int k = 0; k < n; ++k) comps.push_back(std::make_shared<ExpressionFunction>(expr::constant(0.0), n, 4));
  return VectorField(std::move(comps));
}

void ProblemSpec::check() const {
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon T must be positive");
  if (n < 1 || m < 1) throw std::invalid_argument("dimensions n and m must be at least 1");
  if (static_cast<int>(fields.size()) != m + 1) throw std::invalid_argument("expected m + 1 vector fields f_0 .. f_m");
  for (const auto& f : fields)
    if (f.dim() != n) throw std::invalid_argument("vector field dimension does not match n");
  if (!cost.function || cost.function->dim() != n + m)
    throw std::invalid_argument("running cost must be a function of (x, u) in R^(n+m)");
  if (!terminal.function || terminal.function->dim() != n)
    throw std::invalid_argument("terminal cost must be a function on R^n");
  if (!(box_radius > 0.0)) throw std::invalid_argument("box radius must be positive");
}

Vec join(const Vec& x, const Vec& u) {
  Vec y(x.size() + u.size());
  y << x, u;
  return y;
}

Vec assemble_f(const ProblemSpec& spec, const Vec& x, const Vec& u) {
  if (x.size() != spec.n || u.size() != spec.m) throw std::invalid_argument("assemble_f: dimension mismatch");
  Vec f = spec.fields[0].value(x);
  for (int a = 0; a < spec.m; ++a)
    if (u[a] != 0.0) f += u[a] * spec.fields[static_cast<std::size_t>(a) + 1].value(x);
  return f;
}

DynamicsJet assemble_dynamics(const ProblemSpec& spec, const Vec& x, const Vec& u, int order) {
  if (x.size() != spec.n || u.size() != spec.m) throw std::invalid_argument("assemble_dynamics: dimension mismatch");
  if (order < 0 || order > 3) throw std::invalid_argument("assemble_dynamics: order must be in [0, 3]");
  const int n = spec.n;
  const int m = spec.m;
  const int d = n + m;

  DynamicsJet out;
  out.order = order;
  out.f = Vec::Zero(n);
  if (order >= 1) out.f_y = Mat::Zero(n, d);
  if (order >= 2) out.f_yy.assign(static_cast<std::size_t>(n), Mat::Zero(d, d));
  if (order >= 3) out.f_yyy.assign(static_cast<std::size_t>(n), Tensor3(d));

  for (int a = 0; a <= m; ++a) {
    const double coeff = a == 0 ? 1.0 : u[a - 1];
    const VectorField& field = spec.fields[static_cast<std::size_t>(a)];
    for (int i = 0; i < n; ++i) {
      const Jet J = field.component(i).jet(x, order);
      out.f[i] += coeff * J.value;
      if (order >= 1) {
        out.f_y.row(i).head(n) += coeff * J.grad.transpose();
        if (a > 0) out.f_y(i, n + a - 1) = J.value;
      }
      if (order >= 2) {
        Mat& H = out.f_yy[static_cast<std::size_t>(i)];
        H.topLeftCorner(n, n) += coeff * J.hess;
        if (a > 0) {
          H.block(0, n + a - 1, n, 1) = J.grad;
          H.block(n + a - 1, 0, 1, n) = J.grad.transpose();
        }
      }
      if (order >= 3) {
        Tensor3& T = out.f_yyy[static_cast<std::size_t>(i)];
        for (int p = 0; p < n; ++p)
          for (int q = 0; q < n; ++q) {
            for (int r = 0; r < n; ++r) T(p, q, r) += coeff * J.third(p, q, r);
            if (a > 0) {
              const int ua = n + a - 1;
              T(p, q, ua) = J.hess(p, q);
              T(p, ua, q) = J.hess(p, q);
              T(ua, p, q) = J.hess(p, q);
            }
          }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

bool ValidationReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

const CheckResult* ValidationReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

Vec sample_ball(std::mt19937_64& rng, int dim, double radius) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = normal(rng);
  const double norm = v.norm();
  if (norm == 0.0) return Vec::Zero(dim);
  return v * (radius * std::pow(unif(rng), 1.0 / dim) / norm);
}

// Largest relative mismatch between analytic order-k derivatives and finite
// differences of order k-1.
double fd_mismatch(const SmoothFunction& f, const Vec& x, int order) {
  const Jet exact = f.jet(x, order);
  const Jet approx = finite_difference_jet(f, x, order);
  double diff = 0.0;
  double scale = 1.0;
  switch (order) {
    case 1:
      diff = (exact.grad - approx.grad).cwiseAbs().maxCoeff();
      scale = std::max(scale, exact.grad.cwiseAbs().maxCoeff());
      break;
    case 2:
      diff = (exact.hess - approx.hess).cwiseAbs().maxCoeff();
      scale = std::max(scale, exact.hess.cwiseAbs().maxCoeff());
      break;
    case 3:
      diff = (exact.third - approx.third).max_abs();
      scale = std::max(scale, exact.third.max_abs());
      break;
    case 4:
      diff = (exact.fourth - approx.fourth).max_abs();
      scale = std::max(scale, exact.fourth.max_abs());
      break;
  }
  return diff / scale;
}

void record(ValidationReport& report, const std::string& name, double worst, bool pass) {
  if (auto* existing = const_cast<CheckResult*>(report.find(name))) {
    existing->worst = std::max(existing->worst, worst);
    existing->pass = existing->pass && pass;
  } else {
    report.checks.push_back({name, worst, pass});
  }
}

}  // namespace

ValidationReport validate(const ProblemSpec& spec, int samples, std::uint64_t seed, double fd_tolerance) {
  spec.check();
  if (samples < 1) throw std::invalid_argument("validate: samples must be at least 1");
  const int n = spec.n;
  const int m = spec.m;
  const double k = spec.box_radius;
  std::mt19937_64 rng(seed);

  ValidationReport report;
  report.observed_convexity = std::numeric_limits<double>::infinity();
  double growth = 0.0;
  double asym = 0.0;

  for (int s = 0; s < samples; ++s) {
    const Vec x = s == 0 ? Vec::Zero(n) : sample_ball(rng, n, k);
    const Vec u = s == 0 ? Vec::Zero(m) : sample_ball(rng, m, k);
    const Vec y = join(x, u);

    const Jet L = spec.cost.function->jet(y, 2);
    const Mat Luu = L.hess.bottomRightCorner(m, m);
    const double min_eig = Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (Luu + Luu.transpose())).eigenvalues().minCoeff();
    report.observed_convexity = std::min(report.observed_convexity, min_eig);
    asym = std::max(asym, (L.hess - L.hess.transpose()).cwiseAbs().maxCoeff());

    for (const auto& field : spec.fields) growth = std::max(growth, field.value(x).norm() / (x.norm() + 1.0));

    const int cost_order = std::min(3, spec.cost.function->analytic_order());
    for (int order = 1; order <= cost_order; ++order) {
      const double err = fd_mismatch(*spec.cost.function, y, order);
      record(report, "fd:L:order" + std::to_string(order), err, err <= fd_tolerance);
    }
    for (std::size_t a = 0; a < spec.fields.size(); ++a)
      for (int i = 0; i < n; ++i) {
        const SmoothFunction& c = spec.fields[a].component(i);
        const int field_order = std::min(3, c.analytic_order());
        for (int order = 1; order <= field_order; ++order) {
          const double err = fd_mismatch(c, x, order);
          record(report, "fd:f" + std::to_string(a) + ":order" + std::to_string(order), err, err <= fd_tolerance);
        }
      }
    const int psi_order = std::min(4, spec.terminal.function->analytic_order());
    for (int order = 1; order <= psi_order; ++order) {
      const double err = fd_mismatch(*spec.terminal.function, x, order);
      record(report, "fd:psi:order" + std::to_string(order), err, err <= fd_tolerance);
    }
    const Mat Dpsi2 = spec.terminal.function->hessian(x);
    asym = std::max(asym, (Dpsi2 - Dpsi2.transpose()).cwiseAbs().maxCoeff());
  }

  report.growth_constant = growth;
  record(report, "convexity", report.observed_convexity,
         report.observed_convexity >= spec.cost.convexity_modulus);
  record(report, "growth", growth, std::isfinite(growth));
  record(report, "symmetry", asym, asym <= 1e-10);
  return report;
}

// ---------------------------------------------------------------------------

ControlOnlyFunction::ControlOnlyFunction(FunctionPtr of_u, int n) : inner_(std::move(of_u)), n_(n) {
  if (!inner_) throw std::invalid_argument("ControlOnlyFunction: null function");
}

Jet ControlOnlyFunction::jet(const Vec& y, int order) const {
  const int m = inner_->dim();
  if (y.size() != n_ + m) throw std::invalid_argument("ControlOnlyFunction::jet: dimension mismatch");
  const Jet inner = inner_->jet(y.tail(m), order);
  Jet out = Jet::zeros(n_ + m, order);
  out.value = inner.value;
  for (int k = 1; k <= order; ++k)
    for_each_sorted_index(m, k, [&](std::span<const int> idx) {
      int shifted[4];
      for (std::size_t t = 0; t < idx.size(); ++t) shifted[t] = idx[t] + n_;
      set_symmetric(out, std::span<const int>(shifted, idx.size()), inner.partial(idx));
    });
  return out;
}

ProblemSpec make_calculus_of_variations_problem(FunctionPtr lagrangian, FunctionPtr terminal, double horizon) {
  if (!lagrangian || !terminal) throw std::invalid_argument("null Lagrangian or terminal cost");
  const int n = terminal->dim();
  if (lagrangian->dim() != n) throw std::invalid_argument("Lagrangian must be a function on R^n");
  ProblemSpec spec;
  spec.horizon = horizon;
  spec.n = n;
  spec.m = n;
  spec.fields.push_back(zero_field(n));
  for (int i = 0; i < n; ++i) spec.fields.push_back(unit_field(n, i));
  spec.cost.function = std::make_shared<ControlOnlyFunction>(std::move(lagrangian), n);
  spec.terminal.function = std::move(terminal);
  spec.calculus_of_variations = true;
  spec.check();
  return spec;
}

}  // namespace conjpt
