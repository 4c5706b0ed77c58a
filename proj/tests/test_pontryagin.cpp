#include <doctest.h>

#include <cmath>

#include "conjpt/conjugate.hpp"
#include "conjpt/errors.hpp"
#include "conjpt/oracle.hpp"
#include "conjpt/pontryagin.hpp"
#include "helpers.hpp"

using namespace conjpt;
using testing::vec;

TEST_CASE("hamiltonian minimizer: quadratic cost gives u = -p") {
  const ProblemSpec spec = testing::cov_problem("0.5 * (u1^2 + u2^2)", "z1 * z2", 2);
  const Vec x = vec({0.3, -1.0});
  const Vec p = vec({0.7, -2.5});
  CHECK((minimize_hamiltonian(spec, x, p, Vec()) + p).norm() < 1e-14);
  CHECK(minimize_hamiltonian(spec, x, Vec::Zero(2), vec({3.0, 4.0})).norm() < 1e-14);
}

TEST_CASE("hamiltonian minimizer: quartic term matches a bisection root") {
  const ProblemSpec spec = testing::cov_problem("0.5 * u1^2 + u1^4 / 12", "z1", 1);
  const double root = testing::bisect([](double u) { return u + u * u * u / 3.0 + 1.0; }, -2.0, 0.0);
  const Vec u = minimize_hamiltonian(spec, vec({0.0}), vec({1.0}), Vec());
  CHECK(std::abs(u[0] - root) < 1e-12);
  CHECK(std::abs(u[0] + 0.817731) < 1e-6);
}

TEST_CASE("hamiltonian minimizer reports non-convergence") {
  // L = u^4 is convex but flat at the minimizer; the residual cannot reach the target in 2 steps.
  const ProblemSpec spec = testing::cov_problem("u1^4", "z1", 1);
  NewtonOptions opts;
  opts.max_iterations = 2;
  CHECK_THROWS_AS(minimize_hamiltonian(spec, vec({0.0}), vec({1.0}), vec({5.0}), opts), NumericalError);
}

TEST_CASE("control jacobians in the calculus-of-variations case") {
  const ProblemSpec spec = testing::cov_problem("0.5 * (u1^2 + u2^2)", "z1 * z2", 2);
  const Vec x = vec({0.1, 0.2});
  const Vec p = vec({-0.4, 0.9});
  const Vec u = minimize_hamiltonian(spec, x, p, Vec());
  Mat p_z(2, 2);
  p_z << 1.0, 2.0, 2.0, -3.0;
  const ControlJacobians cj = control_jacobians(spec, x, p, u, Mat::Identity(2, 2), p_z);
  CHECK((cj.u_z + p_z).norm() < 1e-14);
  CHECK(control_jacobians(spec, x, p, u, Mat::Zero(2, 2), Mat::Zero(2, 2)).u_z.norm() == 0.0);
}

TEST_CASE("extremal: terminal data, stationarity and short horizons") {
  const ProblemSpec spec = testing::nonlinear2d();
  const Vec z = vec({0.4, -0.7});
  const ExtremalTrajectory tr = solve_extremal(spec, z, 200);
  CHECK(tr.x.back() == z);
  CHECK(tr.p.back() == spec.terminal.function->gradient(z));
  CHECK(tr.max_stationarity_residual < 1e-11);
  CHECK(tr.x.size() == 201);
  CHECK_THROWS_AS(solve_extremal(spec, z, 15), std::invalid_argument);

  ProblemSpec quick = spec;
  quick.horizon = 1e-8;
  CHECK((solve_extremal(quick, z, 16).x.front() - z).norm() < 1e-7);
}

TEST_CASE("extremal: linear terminal cost gives a straight line with constant control") {
  const ProblemSpec spec = testing::cov_problem("0.5 * (u1^2 + u2^2)", "0.3 * z1 - 0.2 * z2", 2, 1.5);
  const Vec z = vec({1.0, 2.0});
  const Vec c = vec({0.3, -0.2});
  const ExtremalTrajectory tr = solve_extremal(spec, z, 64);
  for (const Vec& u : tr.u) CHECK((u + c).norm() < 1e-14);
  CHECK((tr.x.front() - (z + 1.5 * c)).norm() < 1e-13);
  // Cost: T |c|^2 / 2 + psi(z).
  CHECK(std::abs(tr.cost - (1.5 * 0.5 * c.squaredNorm() + c.dot(z))) < 1e-13);
}

TEST_CASE("sensitivities: terminal values and closed forms for |u|^2 / 2") {
  const ProblemSpec spec = testing::cov_problem("0.5 * (u1^2 + u2^2)", "cos(z1) + 0.5 * sin(z1 + z2)", 2);
  const Vec z = vec({0.7, -1.2});
  const Vec v = vec({0.6, 0.8});
  const SensitivityBundle b = solve_variational(spec, solve_extremal(spec, z), v);
  const Mat D2psi = spec.terminal.function->hessian(z);
  CHECK(b.x_z.back() == Mat::Identity(2, 2));
  CHECK(b.p_z.back() == D2psi);
  CHECK(b.xzz_vv.back().norm() == 0.0);
  CHECK((b.x_z.front() - (Mat::Identity(2, 2) + D2psi)).norm() < 1e-8);
  CHECK(costate_identity_defect(spec, b) < 1e-6);

  const ProblemSpec quad = testing::cov_problem("0.5 * (u1^2 + u2^2)", "-0.5 * z1^2 + 2 * z1 * z2 + z2^2", 2);
  const SensitivityBundle bq = solve_variational(quad, solve_extremal(quad, z), v);
  for (const Vec& X : bq.xzz_vv) CHECK(X.norm() < 1e-13);
}

TEST_CASE("sensitivities match finite differences of re-solved extremals") {
  const ProblemSpec spec = testing::nonlinear2d();
  const Vec z = vec({0.4, -0.7});
  const Vec v = vec({0.8, -0.6});
  const SensitivityBundle b = solve_variational(spec, solve_extremal(spec, z), v);

  const double h = 1e-4;
  Mat fd_xz(2, 2);
  for (int i = 0; i < 2; ++i) {
    Vec e = Vec::Zero(2);
    e[i] = h;
    fd_xz.col(i) = (solve_extremal(spec, z + e).x.front() - solve_extremal(spec, z - e).x.front()) / (2 * h);
  }
  CHECK((b.x_z.front() - fd_xz).norm() < 1e-5);

  const double s = 1e-3;
  auto x0 = [&](double t) -> Vec { return solve_extremal(spec, Vec(z + t * v)).x.front(); };
  const Vec fd_xzz = (x0(s) - 2.0 * x0(0.0) + x0(-s)) / (s * s);
  CHECK((b.xzz_vv.front() - fd_xzz).norm() < 1e-4);
  CHECK(costate_identity_defect(spec, b) < 1e-6);
}

TEST_CASE("control jacobian matches finite differences across neighboring extremals") {
  const ProblemSpec spec = testing::nonlinear1d();
  const Vec z = vec({0.6});
  const SensitivityBundle b = solve_variational(spec, solve_extremal(spec, z));
  const double h = 1e-4;
  const ExtremalTrajectory plus = solve_extremal(spec, z + vec({h}));
  const ExtremalTrajectory minus = solve_extremal(spec, z - vec({h}));
  double worst = 0.0;
  for (std::size_t j = 0; j < plus.u.size(); j += 20)
    worst = std::max(worst, std::abs(b.u_z[j](0, 0) - (plus.u[j][0] - minus.u[j][0]) / (2 * h)));
  CHECK(worst < 1e-5);
}

TEST_CASE("sensitivities converge at fourth order under step halving") {
  const ProblemSpec spec = testing::nonlinear2d();
  const Vec z = vec({0.4, -0.7});
  const Mat reference = solve_variational(spec, solve_extremal(spec, z, 3200)).x_z.front();
  double previous = 0.0;
  for (int N : {50, 100, 200}) {
    const double err = (solve_variational(spec, solve_extremal(spec, z, N)).x_z.front() - reference).norm();
    if (previous > 0.0) CHECK(std::log2(previous / err) >= 3.5);
    previous = err;
  }
}

TEST_CASE("auxiliary w links the replayed trajectory to x_zz along a kernel direction") {
  // Conjugate point of a control-affine problem with drift, found by the scan.
  ProblemSpec spec = testing::nonlinear1d();
  spec.terminal.function = make_expression_function("-1.5 * x1^2 + 0.5 * x1^3", {"x1"});
  ConjugateOptions opts;
  opts.compute_kappa = false;
  const auto found = scan(spec, ScanBox::cube(1, 1.0), 11, opts);
  REQUIRE(found.size() == 1);
  const Vec zbar = found[0].z;
  const Vec v = found[0].v;
  const int N = 400;
  const ExtremalTrajectory base = solve_extremal(spec, zbar, N);
  const SensitivityBundle b = solve_variational(spec, base, v);
  REQUIRE(std::abs(b.x_z.front()(0, 0)) < 1e-8);

  const double s = 1e-3;
  auto tilde = [&](double t) { return replay(spec, solve_extremal(spec, Vec(zbar + t * v), N), base.x.front()); };
  const ReplayResult plus = tilde(s), mid = tilde(0.0), minus = tilde(-s);
  for (int j : {0, N / 2, N}) {
    const auto J = static_cast<std::size_t>(j);
    const Vec fd = (plus.trajectory[J] - 2.0 * mid.trajectory[J] + minus.trajectory[J]) / (s * s);
    CHECK((fd - (b.xzz_vv[J] + b.w[J])).norm() < 1e-4);
  }
  // w solves the forward linear equation, so it is nonzero throughout here.
  CHECK(b.w.front().norm() > 1e-3);
}
