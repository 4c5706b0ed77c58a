#pragma once

// Problem data for a control-affine Bolza problem
//
//   minimize  int_0^T L(x, u) dt + psi(x(T)),   x' = f_0(x) + sum_i f_i(x) u_i,
//
// together with the derivative assembly the solvers need and a sampled check
// of the standing assumptions (sublinear growth of the fields, uniform
// convexity of L in u, derivative providers consistent with finite differences).

#include <cstdint>
#include <string>
#include <vector>

#include "conjpt/smooth_function.hpp"

namespace conjpt {

/// A vector field R^n -> R^n stored as n scalar components.
class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(std::vector<FunctionPtr> components);

  int dim() const { return static_cast<int>(components_.size()); }
  const SmoothFunction& component(int i) const { return *components_[static_cast<std::size_t>(i)]; }
  const FunctionPtr& component_ptr(int i) const { return components_[static_cast<std::size_t>(i)]; }

  Vec value(const Vec& x) const;
  Mat jacobian(const Vec& x) const;

 private:
  std::vector<FunctionPtr> components_;
};

/// Constant field e_i in R^n.
VectorField unit_field(int n, int i);
/// Identically zero field.
VectorField zero_field(int n);

/// L(x, u) as a function on R^{n+m}, arguments ordered (x_1..x_n, u_1..u_m).
struct RunningCost {
  FunctionPtr function;
  /// Declared uniform-convexity modulus delta_L: L_uu - delta_L I >= 0.
  double convexity_modulus = 1e-6;
};

struct TerminalCost {
  FunctionPtr function;
};

struct ProblemSpec {
  double horizon = 1.0;
  int n = 1;
  int m = 1;
  /// f_0 (drift), f_1 .. f_m.
  std::vector<VectorField> fields;
  RunningCost cost;
  TerminalCost terminal;
  /// Radius k of the working ball B_k used by sampling checks and scans.
  double box_radius = 5.0;
  /// x' = u and L = L(u): closed forms of the cov module apply.
  bool calculus_of_variations = false;

  /// Throws std::invalid_argument on inconsistent dimensions or T <= 0.
  void check() const;
};

/// f(x, u) and its derivatives with respect to y = (x, u) in R^{n+m}.
/// Because f is affine in u, every block with two or more u-derivatives is zero.
struct DynamicsJet {
  int order = 0;
  Vec f;
  /// n x (n+m).
  Mat f_y;
  /// Per component i: (n+m) x (n+m).
  std::vector<Mat> f_yy;
  /// Per component i: third derivative tensor over (n+m).
  std::vector<Tensor3> f_yyy;

  Mat f_x(int n) const { return f_y.leftCols(n); }
  Mat f_u(int n) const { return f_y.rightCols(f_y.cols() - n); }
};

/// f_0(x) + sum_i f_i(x) u_i.
Vec assemble_f(const ProblemSpec& spec, const Vec& x, const Vec& u);

/// f and its y-derivatives up to `order` (<= 3).
DynamicsJet assemble_dynamics(const ProblemSpec& spec, const Vec& x, const Vec& u, int order);

/// Concatenates (x, u).
Vec join(const Vec& x, const Vec& u);

struct CheckResult {
  std::string name;
  /// Worst observed value of the checked quantity (violation or modulus).
  double worst = 0.0;
  bool pass = true;
};

struct ValidationReport {
  std::vector<CheckResult> checks;
  /// Smallest eigenvalue of L_uu seen over the samples.
  double observed_convexity = 0.0;
  /// Smallest c_1 with |f_i(x)| <= c_1 (|x| + 1) over the samples.
  double growth_constant = 0.0;

  bool all_pass() const;
  const CheckResult* find(const std::string& name) const;
};

/// Samples `samples` points (x, u) of the working ball (the origin first) and
/// checks convexity of L_uu, the growth bound, symmetry of mixed partials and
/// agreement of every analytic derivative provider with a finite difference of
/// the order below (relative tolerance `fd_tolerance`). Never throws on a
/// failed check; failures are recorded in the report.
ValidationReport validate(const ProblemSpec& spec, int samples, std::uint64_t seed = 1,
                          double fd_tolerance = 1e-6);

/// Embeds a function of u in R^m as a function of (x, u) in R^{n+m}.
class ControlOnlyFunction final : public SmoothFunction {
 public:
  ControlOnlyFunction(FunctionPtr of_u, int n);
  int dim() const override { return n_ + inner_->dim(); }
  int analytic_order() const override { return inner_->analytic_order(); }
  Jet jet(const Vec& y, int order) const override;

 private:
  FunctionPtr inner_;
  int n_;
};

/// x' = u, L = L(u), n = m.
ProblemSpec make_calculus_of_variations_problem(FunctionPtr lagrangian, FunctionPtr terminal, double horizon);

}  // namespace conjpt
