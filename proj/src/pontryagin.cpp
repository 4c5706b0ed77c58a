#include "conjpt/pontryagin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "conjpt/errors.hpp"

namespace conjpt {

namespace {

Mat control_matrix(const ProblemSpec& spec, const Vec& x) {
  Mat F(spec.n, spec.m);
  for (int a = 0; a < spec.m; ++a) F.col(a) = spec.fields[static_cast<std::size_t>(a) + 1].value(x);
  return F;
}

}  // namespace

Vec damped_newton_minimize(const std::function<Jet(const Vec&)>& jet2, const std::function<double(const Vec&)>& value,
                           const Vec& linear, Vec w, double target, int max_iterations, const std::string& solver,
                           const Vec& point) {
  for (int it = 0; it <= max_iterations; ++it) {
    const Jet J = jet2(w);
    const Vec g = J.grad + linear;
    if (g.norm() <= target) return w;
    if (it == max_iterations) break;

    Eigen::LDLT<Mat> ldlt(J.hess);
    Vec step = -ldlt.solve(g);
    const bool newton_step =
        ldlt.info() == Eigen::Success && ldlt.isPositive() && step.allFinite() && g.dot(step) < 0.0;
    if (!newton_step) step = -g;

    // Armijo backtracking. Once the predicted decrease is below the roundoff of
    // the objective the test is noise, so the Newton step is taken as is.
    const double phi0 = J.value + linear.dot(w);
    const double slope = g.dot(step);
    const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(phi0));
    double t = 1.0;
    bool accepted = newton_step && -slope <= roundoff;
    for (int k = 0; k < 40 && !accepted; ++k) {
      const Vec cand = w + t * step;
      const double phi = value(cand) + linear.dot(cand);
      if (std::isfinite(phi) && phi <= phi0 + 1e-4 * t * slope) accepted = true;
      else t *= 0.5;
    }
    if (!accepted) t = 1.0;
    w += t * step;
    if (!w.allFinite()) break;
  }
  throw NumericalError(solver, "Newton did not converge", to_std_vector(point));
}

Vec minimize_hamiltonian(const ProblemSpec& spec, const Vec& x, const Vec& p, const Vec& guess,
                         const NewtonOptions& options) {
  const int n = spec.n;
  const int m = spec.m;
  if (x.size() != n || p.size() != n) throw std::invalid_argument("minimize_hamiltonian: dimension mismatch");
  const Vec Fp = control_matrix(spec, x).transpose() * p;
  const SmoothFunction& L = *spec.cost.function;
  auto jet2 = [&](const Vec& u) {
    Jet full = L.jet(join(x, u), 2);
    Jet J = Jet::zeros(m, 2);
    J.value = full.value;
    J.grad = full.grad.tail(m);
    J.hess = full.hess.bottomRightCorner(m, m);
    return J;
  };
  auto value = [&](const Vec& u) { return L.value(join(x, u)); };
  return damped_newton_minimize(jet2, value, Fp, guess.size() == m && guess.allFinite() ? guess : Vec::Zero(m),
                                options.tolerance * std::max(1.0, Fp.norm()), options.max_iterations,
                                "minimize_hamiltonian", x);
}

// ---------------------------------------------------------------------------

Vec PointDerivatives::H_yyy(const Vec& a, const Vec& b) const {
  Vec r = cost.third.contract(a, b);
  for (int i = 0; i < n; ++i) r += p[i] * dynamics.f_yyy[static_cast<std::size_t>(i)].contract(a, b);
  return r;
}

PointDerivatives point_derivatives(const ProblemSpec& spec, const Vec& x, const Vec& p, const Vec& u, int order) {
  if (order < 2 || order > 3) throw std::invalid_argument("point_derivatives: order must be 2 or 3");
  PointDerivatives d;
  d.n = spec.n;
  d.m = spec.m;
  d.p = p;
  d.dynamics = assemble_dynamics(spec, x, u, order);
  d.cost = spec.cost.function->jet(join(x, u), order);
  d.H_yy = d.cost.hess;
  for (int i = 0; i < spec.n; ++i) d.H_yy += p[i] * d.dynamics.f_yy[static_cast<std::size_t>(i)];
  d.H_uu.compute(d.H_yy.bottomRightCorner(spec.m, spec.m));
  if (d.H_uu.info() != Eigen::Success || !d.H_uu.isPositive() || d.H_uu.rcond() < 1e-14)
    throw NumericalError("control_jacobians", "L_uu is singular", to_std_vector(x));
  return d;
}

Mat control_jacobian(const PointDerivatives& d, const Mat& x_z, const Mat& p_z) {
  const Mat H_ux = d.H_yy.bottomLeftCorner(d.m, d.n);
  return -d.H_uu.solve(d.f_u().transpose() * p_z + H_ux * x_z);
}

namespace {

struct SecondOrderRates {
  Vec u_zz;
  Vec x_dot;
  Vec p_dot;
};

SecondOrderRates second_order_rates(const PointDerivatives& d, const Vec& w, const Vec& q, const Vec& b,
                                    const Vec& X, const Vec& P) {
  const int n = d.n;
  const int m = d.m;
  const Vec Y = join(w, b);
  Vec cross = Vec::Zero(n + m);
  Vec quad(n);
  for (int i = 0; i < n; ++i) {
    const Vec fY = d.dynamics.f_yy[static_cast<std::size_t>(i)] * Y;
    cross += q[i] * fY;
    quad[i] = Y.dot(fY);
  }
  const Vec r = d.H_yyy(Y, Y);
  const Mat f_x = d.f_x();
  const Mat f_u = d.f_u();

  SecondOrderRates out;
  out.u_zz = -d.H_uu.solve(f_u.transpose() * P + 2.0 * cross.tail(m) + r.tail(m) +
                           d.H_yy.bottomLeftCorner(m, n) * X);
  out.x_dot = quad + f_x * X + f_u * out.u_zz;
  out.p_dot = -(f_x.transpose() * P) - 2.0 * cross.head(n) - r.head(n) - d.H_yy.topLeftCorner(n, n) * X -
              d.H_yy.topRightCorner(n, m) * out.u_zz;
  return out;
}

}  // namespace

Vec control_second_order(const PointDerivatives& d, const Vec& w, const Vec& q, const Vec& b, const Vec& X,
                         const Vec& P) {
  return second_order_rates(d, w, q, b, X, P).u_zz;
}

ControlJacobians control_jacobians(const ProblemSpec& spec, const Vec& x, const Vec& p, const Vec& u, const Mat& x_z,
                                   const Mat& p_z, const std::optional<SecondOrderData>& second) {
  const PointDerivatives d = point_derivatives(spec, x, p, u, second ? 3 : 2);
  ControlJacobians out;
  out.u_z = control_jacobian(d, x_z, p_z);
  if (second) {
    const Vec& v = second->direction;
    out.u_zz_vv = control_second_order(d, x_z * v, p_z * v, out.u_z * v, second->x_zz_vv, second->p_zz_vv);
  }
  return out;
}

// ---------------------------------------------------------------------------

ExtremalTrajectory solve_extremal(const ProblemSpec& spec, const Vec& z, int steps, const NewtonOptions& newton) {
  spec.check();
  if (steps < 16) throw std::invalid_argument("solve_extremal: at least 16 steps are required");
  if (z.size() != spec.n) throw std::invalid_argument("solve_extremal: terminal point has wrong dimension");
  const int n = spec.n;
  const int m = spec.m;
  const int N = steps;
  const double h = spec.horizon / N;
  const SmoothFunction& L = *spec.cost.function;

  ExtremalTrajectory tr;
  tr.z = z;
  tr.horizon = spec.horizon;
  tr.steps = N;
  const auto nodes = static_cast<std::size_t>(N) + 1;
  tr.x.resize(nodes);
  tr.p.resize(nodes);
  tr.u.resize(nodes);
  tr.x_dot.resize(nodes);
  tr.p_dot.resize(nodes);

  Vec u_warm = Vec::Zero(m);
  auto rates = [&](const Vec& x, const Vec& p, Vec& x_dot, Vec& p_dot) {
    u_warm = minimize_hamiltonian(spec, x, p, u_warm, newton);
    const DynamicsJet J = assemble_dynamics(spec, x, u_warm, 1);
    const Jet Lj = L.jet(join(x, u_warm), 1);
    x_dot = J.f;
    p_dot = -(J.f_y.leftCols(n).transpose() * p + Lj.grad.head(n));
  };

  Vec x = z;
  Vec p = spec.terminal.function->gradient(z);
  Vec k1x, k1p, k2x, k2p, k3x, k3p, k4x, k4p;
  for (int j = N; j > 0; --j) {
    const auto J = static_cast<std::size_t>(j);
    rates(x, p, k1x, k1p);
    tr.x[J] = x;
    tr.p[J] = p;
    tr.u[J] = u_warm;
    tr.x_dot[J] = k1x;
    tr.p_dot[J] = k1p;
    rates(x - 0.5 * h * k1x, p - 0.5 * h * k1p, k2x, k2p);
    rates(x - 0.5 * h * k2x, p - 0.5 * h * k2p, k3x, k3p);
    rates(x - h * k3x, p - h * k3p, k4x, k4p);
    x -= (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    p -= (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    if (!x.allFinite() || !p.allFinite())
      throw NumericalError("solve_extremal", "non-finite state during backward integration", to_std_vector(z));
  }
  rates(x, p, k1x, k1p);
  tr.x[0] = x;
  tr.p[0] = p;
  tr.u[0] = u_warm;
  tr.x_dot[0] = k1x;
  tr.p_dot[0] = k1p;

  tr.x_mid.resize(static_cast<std::size_t>(N));
  tr.p_mid.resize(static_cast<std::size_t>(N));
  tr.u_mid.resize(static_cast<std::size_t>(N));
  for (std::size_t j = 0; j < static_cast<std::size_t>(N); ++j) {
    tr.x_mid[j] = 0.5 * (tr.x[j] + tr.x[j + 1]) + (h / 8.0) * (tr.x_dot[j] - tr.x_dot[j + 1]);
    tr.p_mid[j] = 0.5 * (tr.p[j] + tr.p[j + 1]) + (h / 8.0) * (tr.p_dot[j] - tr.p_dot[j + 1]);
    tr.u_mid[j] = minimize_hamiltonian(spec, tr.x_mid[j], tr.p_mid[j], 0.5 * (tr.u[j] + tr.u[j + 1]), newton);
  }

  auto residual = [&](const Vec& xx, const Vec& pp, const Vec& uu) {
    const Jet Lj = L.jet(join(xx, uu), 1);
    return (control_matrix(spec, xx).transpose() * pp + Lj.grad.tail(m)).norm();
  };
  tr.running_cost.resize(nodes);
  tr.running_cost_mid.resize(static_cast<std::size_t>(N));
  double integral = 0.0;
  for (std::size_t j = 0; j < nodes; ++j) {
    tr.running_cost[j] = L.value(join(tr.x[j], tr.u[j]));
    tr.max_stationarity_residual = std::max(tr.max_stationarity_residual, residual(tr.x[j], tr.p[j], tr.u[j]));
  }
  for (std::size_t j = 0; j < static_cast<std::size_t>(N); ++j) {
    tr.running_cost_mid[j] = L.value(join(tr.x_mid[j], tr.u_mid[j]));
    tr.max_stationarity_residual =
        std::max(tr.max_stationarity_residual, residual(tr.x_mid[j], tr.p_mid[j], tr.u_mid[j]));
    integral += (h / 6.0) * (tr.running_cost[j] + 4.0 * tr.running_cost_mid[j] + tr.running_cost[j + 1]);
  }
  tr.cost = integral + spec.terminal.function->value(z);
  return tr;
}

// ---------------------------------------------------------------------------

namespace {

// Packed state (x_z, p_z [, X, P]) of the variational systems.
struct VariationalLayout {
  int n;
  bool second;
  Eigen::Index size() const { return 2 * n * n + (second ? 2 * n : 0); }
};

Vec variational_rates(const VariationalLayout& lay, const PointDerivatives& d, const Vec& S,
                      const std::optional<Vec>& v) {
  const int n = lay.n;
  const Eigen::Map<const Mat> Xz(S.data(), n, n);
  const Eigen::Map<const Mat> Pz(S.data() + n * n, n, n);
  const Mat Uz = control_jacobian(d, Xz, Pz);
  const Mat f_x = d.f_x();
  Vec out(lay.size());
  Eigen::Map<Mat> dXz(out.data(), n, n);
  Eigen::Map<Mat> dPz(out.data() + n * n, n, n);
  dXz = f_x * Xz + d.f_u() * Uz;
  dPz = -(f_x.transpose() * Pz) - d.H_yy.topLeftCorner(n, n) * Xz - d.H_yy.topRightCorner(n, d.m) * Uz;
  if (lay.second) {
    const Vec X = S.segment(2 * n * n, n);
    const Vec P = S.segment(2 * n * n + n, n);
    const SecondOrderRates r = second_order_rates(d, Xz * *v, Pz * *v, Uz * *v, X, P);
    out.segment(2 * n * n, n) = r.x_dot;
    out.segment(2 * n * n + n, n) = r.p_dot;
  }
  return out;
}

}  // namespace

SensitivityBundle solve_variational(const ProblemSpec& spec, const ExtremalTrajectory& tr,
                                    const std::optional<Vec>& direction) {
  const int n = spec.n;
  const int N = tr.steps;
  if (tr.z.size() != n || N < 1) throw std::invalid_argument("solve_variational: trajectory does not match problem");
  if (direction && (direction->size() != n || direction->norm() == 0.0))
    throw std::invalid_argument("solve_variational: direction must be a nonzero vector in R^n");
  const double h = tr.step();
  const int order = direction ? 3 : 2;
  const auto nodes = static_cast<std::size_t>(N) + 1;

  std::vector<PointDerivatives> at_node(nodes), at_mid(static_cast<std::size_t>(N));
  for (std::size_t j = 0; j < nodes; ++j) at_node[j] = point_derivatives(spec, tr.x[j], tr.p[j], tr.u[j], order);
  for (std::size_t j = 0; j < static_cast<std::size_t>(N); ++j)
    at_mid[j] = point_derivatives(spec, tr.x_mid[j], tr.p_mid[j], tr.u_mid[j], order);

  const VariationalLayout lay{n, direction.has_value()};
  const Jet psi = spec.terminal.function->jet(tr.z, direction ? 3 : 2);
  Vec S = Vec::Zero(lay.size());
  Eigen::Map<Mat>(S.data(), n, n) = Mat::Identity(n, n);
  Eigen::Map<Mat>(S.data() + n * n, n, n) = psi.hess;
  if (direction) S.segment(2 * n * n + n, n) = psi.third.contract(*direction, *direction);

  SensitivityBundle out;
  out.base = tr;
  out.direction = direction;
  out.x_z.resize(nodes);
  out.p_z.resize(nodes);
  out.u_z.resize(nodes);
  if (direction) {
    out.xzz_vv.resize(nodes);
    out.pzz_vv.resize(nodes);
    out.uzz_vv.resize(nodes);
  }
  auto store = [&](std::size_t j) {
    const Eigen::Map<const Mat> Xz(S.data(), n, n);
    const Eigen::Map<const Mat> Pz(S.data() + n * n, n, n);
    out.x_z[j] = Xz;
    out.p_z[j] = Pz;
    out.u_z[j] = control_jacobian(at_node[j], out.x_z[j], out.p_z[j]);
    if (direction) {
      const Vec& v = *direction;
      out.xzz_vv[j] = S.segment(2 * n * n, n);
      out.pzz_vv[j] = S.segment(2 * n * n + n, n);
      out.uzz_vv[j] = control_second_order(at_node[j], out.x_z[j] * v, out.p_z[j] * v, out.u_z[j] * v,
                                           out.xzz_vv[j], out.pzz_vv[j]);
    }
  };

  store(static_cast<std::size_t>(N));
  for (int jj = N; jj > 0; --jj) {
    const auto j = static_cast<std::size_t>(jj);
    const Vec k1 = variational_rates(lay, at_node[j], S, direction);
    const Vec k2 = variational_rates(lay, at_mid[j - 1], S - 0.5 * h * k1, direction);
    const Vec k3 = variational_rates(lay, at_mid[j - 1], S - 0.5 * h * k2, direction);
    const Vec k4 = variational_rates(lay, at_node[j - 1], S - h * k3, direction);
    S -= (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!S.allFinite())
      throw NumericalError("solve_variational", "non-finite sensitivities", to_std_vector(tr.z));
    store(j - 1);
  }

  if (direction) {
    out.w.resize(nodes);
    Vec w = -out.xzz_vv[0];
    out.w[0] = w;
    for (std::size_t j = 0; j < static_cast<std::size_t>(N); ++j) {
      const Mat A0 = at_node[j].f_x();
      const Mat Am = at_mid[j].f_x();
      const Mat A1 = at_node[j + 1].f_x();
      const Vec k1 = A0 * w;
      const Vec k2 = Am * (w + 0.5 * h * k1);
      const Vec k3 = Am * (w + 0.5 * h * k2);
      const Vec k4 = A1 * (w + h * k3);
      w += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      out.w[j + 1] = w;
    }
  }
  return out;
}

double costate_identity_defect(const ProblemSpec& spec, const SensitivityBundle& b) {
  const ExtremalTrajectory& tr = b.base;
  const int n = spec.n;
  const int m = spec.m;
  const int N = tr.steps;
  if (N < 3) throw std::invalid_argument("costate_identity_defect: need at least 3 steps");
  const double h = tr.step();
  const auto nodes = static_cast<std::size_t>(N) + 1;

  std::vector<Vec> pxz(nodes), gamma_z(nodes);
  for (std::size_t j = 0; j < nodes; ++j) {
    const Jet Lj = spec.cost.function->jet(join(tr.x[j], tr.u[j]), 1);
    pxz[j] = b.x_z[j].transpose() * tr.p[j];
    gamma_z[j] = b.x_z[j].transpose() * Lj.grad.head(n) + b.u_z[j].transpose() * Lj.grad.tail(m);
  }

  // Integral over cell [t_j, t_{j+1}] of the cubic through four neighboring nodes.
  auto cell_integral = [&](std::size_t j) -> Vec {
    if (j == 0) return (h / 24.0) * (9.0 * gamma_z[0] + 19.0 * gamma_z[1] - 5.0 * gamma_z[2] + gamma_z[3]);
    if (j + 1 == nodes - 1)
      return (h / 24.0) * (gamma_z[j - 2] - 5.0 * gamma_z[j - 1] + 19.0 * gamma_z[j] + 9.0 * gamma_z[j + 1]);
    return (h / 24.0) * (-gamma_z[j - 1] + 13.0 * gamma_z[j] + 13.0 * gamma_z[j + 1] - gamma_z[j + 2]);
  };

  double worst = 0.0;
  for (std::size_t j = 0; j + 1 < nodes; ++j)
    worst = std::max(worst, (pxz[j + 1] - pxz[j] + cell_integral(j)).cwiseAbs().maxCoeff());
  return worst;
}

}  // namespace conjpt
