#include "conjpt/oracle.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "conjpt/errors.hpp"

namespace conjpt {

ReplayResult replay(const ProblemSpec& spec, const ExtremalTrajectory& src, const Vec& start) {
  if (start.size() != spec.n) throw std::invalid_argument("replay: start point has wrong dimension");
  const int N = src.steps;
  const double h = src.step();
  const SmoothFunction& L = *spec.cost.function;

  ReplayResult out;
  out.z = src.z;
  out.trajectory.resize(static_cast<std::size_t>(N) + 1);
  Vec x = start;
  Vec f0 = assemble_f(spec, x, src.u[0]);
  double integral = 0.0;
  out.trajectory[0] = x;
  for (std::size_t j = 0; j < static_cast<std::size_t>(N); ++j) {
    const Vec& u0 = src.u[j];
    const Vec& um = src.u_mid[j];
    const Vec& u1 = src.u[j + 1];
    const Vec k1 = f0;
    const Vec k2 = assemble_f(spec, x + 0.5 * h * k1, um);
    const Vec k3 = assemble_f(spec, x + 0.5 * h * k2, um);
    const Vec k4 = assemble_f(spec, x + h * k3, u1);
    const Vec next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite()) throw NumericalError("replay_cost", "non-finite replay state", to_std_vector(src.z));
    const Vec f1 = assemble_f(spec, next, u1);
    const Vec mid = 0.5 * (x + next) + (h / 8.0) * (f0 - f1);
    integral += (h / 6.0) * (L.value(join(x, u0)) + 4.0 * L.value(join(mid, um)) + L.value(join(next, u1)));
    x = next;
    f0 = f1;
    out.trajectory[j + 1] = x;
  }
  out.cost = integral + spec.terminal.function->value(x);
  return out;
}

ReplayResult replay_cost(const ProblemSpec& spec, const Vec& z, const Vec& zbar, int steps) {
  const ExtremalTrajectory base = solve_extremal(spec, zbar, steps);
  const ExtremalTrajectory src = solve_extremal(spec, z, steps);
  ReplayResult out = replay(spec, src, base.x.front());
  out.zbar = zbar;
  return out;
}

GDerivatives g_derivatives(const ProblemSpec& spec, const Vec& zbar, const Vec& v, const OracleOptions& options) {
  if (v.size() != spec.n || zbar.size() != spec.n) throw std::invalid_argument("g_derivatives: dimension mismatch");
  if (!(options.h > 0.0)) throw std::invalid_argument("g_derivatives: step must be positive");
  const double h = options.h;
  const Vec start = solve_extremal(spec, zbar, options.steps).x.front();

  // theta = 0, +-h/2, +-h, +-2h
  const std::array<double, 7> thetas{0.0, 0.5 * h, -0.5 * h, h, -h, 2.0 * h, -2.0 * h};
  std::array<double, 7> g{};
  for_each_index(thetas.size(), options.execution, [&](std::size_t i) {
    const ExtremalTrajectory src = solve_extremal(spec, Vec(zbar + thetas[i] * v), options.steps);
    g[i] = replay(spec, src, start).cost;
  });
  const double g0 = g[0];
  // Stencils at step s given g(+-s), g(+-2s).
  auto d1 = [](double gp, double gm, double s) { return (gp - gm) / (2.0 * s); };
  auto d2 = [g0](double gp, double gm, double s) { return (gp - 2.0 * g0 + gm) / (s * s); };
  auto d3 = [](double gp, double gm, double gp2, double gm2, double s) {
    return (-gm2 + 2.0 * gm - 2.0 * gp + gp2) / (2.0 * s * s * s);
  };
  auto richardson = [](double fine, double coarse) { return (4.0 * fine - coarse) / 3.0; };

  GDerivatives out;
  out.g0 = g0;
  out.g1 = richardson(d1(g[1], g[2], 0.5 * h), d1(g[3], g[4], h));
  out.g2 = richardson(d2(g[1], g[2], 0.5 * h), d2(g[3], g[4], h));
  out.g3 = richardson(d3(g[1], g[2], g[3], g[4], 0.5 * h), d3(g[3], g[4], g[5], g[6], h));
  return out;
}

LemmaReport check_lemma(const ProblemSpec& spec, const ConjugateCandidate& candidate, const OracleOptions& options,
                        const ConjugateOptions& conjugate) {
  LemmaReport r;
  r.kappa = std::isfinite(candidate.kappa) ? candidate.kappa : necessary_condition(spec, candidate, conjugate);
  r.g = g_derivatives(spec, candidate.z, candidate.v, options);
  r.first_order_tolerance = 1e-5 * (1.0 + std::abs(r.g.g0));
  r.third_order_tolerance = std::max(1e-3, 1e-3 * std::abs(r.kappa));
  r.pass = std::abs(r.g.g1) <= r.first_order_tolerance && std::abs(r.g.g2) <= r.first_order_tolerance &&
           std::abs(r.g.g3 + r.kappa) <= r.third_order_tolerance;
  return r;
}

}  // namespace conjpt
