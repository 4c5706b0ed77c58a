#pragma once

// Pontryagin extremals x(t,z), p(t,z), u(t,z) integrated backward from
// x(T) = z, p(T) = grad psi(z), and their first- and second-order sensitivities
// with respect to the terminal point z.
//
// Costates are covectors. They are stored as column vectors, so "p f_x" is
// f_x^T p, and p_z(i, j) = dp_i / dz_j.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "conjpt/problem.hpp"

namespace conjpt {

struct NewtonOptions {
  /// Stationarity residual target, relative to max(1, |f_u^T p|).
  double tolerance = 1e-12;
  int max_iterations = 50;
};

/// Minimizes w -> value(w) + linear . w for a convex `value` by damped Newton
/// from `start`. `jet2(w)` returns the order-2 jet of `value` in w. Stops when
/// the gradient norm is at most `target`; otherwise throws
/// NumericalError(solver, ..., point).
Vec damped_newton_minimize(const std::function<Jet(const Vec&)>& jet2, const std::function<double(const Vec&)>& value,
                           const Vec& linear, Vec start, double target, int max_iterations, const std::string& solver,
                           const Vec& point);

/// The unique u with p f_u(x) + L_u(x, u) = 0, by damped Newton on
/// u -> L(x, u) + p . f(x, u) starting from `guess`.
/// Throws NumericalError when Newton does not converge.
Vec minimize_hamiltonian(const ProblemSpec& spec, const Vec& x, const Vec& p, const Vec& guess,
                         const NewtonOptions& options = {});

/// Derivatives of f, L and the unminimized H(y, p) = p . f(y) + L(y) at one
/// point (x, p, u), y = (x, u).
struct PointDerivatives {
  int n = 0;
  int m = 0;
  Vec p;
  DynamicsJet dynamics;
  Jet cost;
  /// D_yy H, (n+m) x (n+m).
  Mat H_yy;
  Eigen::LDLT<Mat> H_uu;

  Mat f_x() const { return dynamics.f_y.leftCols(n); }
  Mat f_u() const { return dynamics.f_y.rightCols(m); }
  /// H_yyy(., a, b); needs order 3.
  Vec H_yyy(const Vec& a, const Vec& b) const;
};

/// `order` 2 suffices for first-order sensitivities, 3 for the directional
/// second-order system.
PointDerivatives point_derivatives(const ProblemSpec& spec, const Vec& x, const Vec& p, const Vec& u, int order);

/// u_z = -H_uu^{-1} (f_u^T p_z + H_ux x_z).
Mat control_jacobian(const PointDerivatives& d, const Mat& x_z, const Mat& p_z);

/// Second derivative of u along v given w = x_z v, q = p_z v, b = u_z v and
/// the second-order state data X = x_zz(v,v), P = p_zz(v,v).
Vec control_second_order(const PointDerivatives& d, const Vec& w, const Vec& q, const Vec& b, const Vec& X,
                         const Vec& P);

struct ControlJacobians {
  Mat u_z;
  std::optional<Vec> u_zz_vv;
};

/// u_z and, when `second` = (v, x_zz(v,v), p_zz(v,v)) is given, u_zz(v,v).
struct SecondOrderData {
  Vec direction;
  Vec x_zz_vv;
  Vec p_zz_vv;
};
ControlJacobians control_jacobians(const ProblemSpec& spec, const Vec& x, const Vec& p, const Vec& u, const Mat& x_z,
                                   const Mat& p_z, const std::optional<SecondOrderData>& second = std::nullopt);

/// Samples of an extremal on the uniform grid t_j = j T / N. Cell midpoints
/// carry Hermite-interpolated (x, p) and the control re-solved there, which is
/// everything RK4 stages need for the second pass and for replays.
struct ExtremalTrajectory {
  Vec z;
  double horizon = 0.0;
  int steps = 0;
  std::vector<Vec> x, p, u;
  std::vector<Vec> x_dot, p_dot;
  std::vector<Vec> x_mid, p_mid, u_mid;
  /// Gamma = L(x, u) at nodes and midpoints.
  std::vector<double> running_cost, running_cost_mid;
  /// int_0^T L dt + psi(z), composite Simpson with the midpoints.
  double cost = 0.0;
  /// Largest stationarity residual |p f_u + L_u| over nodes and midpoints.
  double max_stationarity_residual = 0.0;

  double step() const { return horizon / steps; }
  double time(int j) const { return horizon * j / steps; }
};

/// Backward RK4 with N = `steps` >= 16 uniform steps, the Hamiltonian
/// minimization re-solved (warm-started) at every stage.
/// Throws NumericalError on Newton failure or a non-finite state.
ExtremalTrajectory solve_extremal(const ProblemSpec& spec, const Vec& z, int steps = 400,
                                  const NewtonOptions& newton = {});

struct SensitivityBundle {
  ExtremalTrajectory base;
  std::vector<Mat> x_z, p_z, u_z;
  /// Present when a direction was requested; all node-sampled.
  std::optional<Vec> direction;
  std::vector<Vec> xzz_vv, pzz_vv, uzz_vv;
  /// Forward solution of w' = f_x w, w(0) = -x_zz(0)(v,v).
  std::vector<Vec> w;
};

/// Integrates the first-order variational system and, for a direction v, the
/// directional second-order system and the auxiliary forward ODE for w.
SensitivityBundle solve_variational(const ProblemSpec& spec, const ExtremalTrajectory& trajectory,
                                    const std::optional<Vec>& direction = std::nullopt);

/// Largest per-cell defect of d/dt (p x_z) = -(L_x x_z + L_u u_z), comparing the
/// increment of p x_z over each cell with a fourth-order quadrature of the right side.
double costate_identity_defect(const ProblemSpec& spec, const SensitivityBundle& bundle);

}  // namespace conjpt
