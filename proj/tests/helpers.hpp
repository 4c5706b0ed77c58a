#pragma once

#include <initializer_list>
#include <string>
#include <vector>

#include "conjpt/expr.hpp"
#include "conjpt/problem.hpp"

namespace testing {

inline conjpt::Vec vec(std::initializer_list<double> values) {
  conjpt::Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

inline conjpt::VectorField field(const std::vector<std::string>& comps) {
  const auto names = conjpt::expr::numbered_names("x", static_cast<int>(comps.size()));
  std::vector<conjpt::FunctionPtr> fs;
  for (const auto& c : comps) fs.push_back(conjpt::make_expression_function(c, names));
  return conjpt::VectorField(fs);
}

/// Control-affine problem with drift, state-dependent control fields and an
/// x-dependent running cost.
inline conjpt::ProblemSpec nonlinear2d() {
  conjpt::ProblemSpec spec;
  spec.horizon = 1.0;
  spec.n = 2;
  spec.m = 2;
  spec.fields = {field({"sin(x2)", "-x1 + 0.1 * cos(x1 * x2)"}), field({"1 + 0.2 * sin(x2)", "0"}),
                 field({"0.3 * cos(x1)", "1"})};
  spec.cost.function = conjpt::make_expression_function(
      "0.5 * (u1^2 + u2^2) + u1^4 / 12 + 0.1 * x1^2 + 0.2 * x2 * u1", {"x1", "x2", "u1", "u2"});
  spec.terminal.function = conjpt::make_expression_function("cos(x1) + 0.5 * sin(x1 + x2)", {"x1", "x2"});
  spec.check();
  return spec;
}

inline conjpt::ProblemSpec nonlinear1d() {
  conjpt::ProblemSpec spec;
  spec.horizon = 1.0;
  spec.n = 1;
  spec.m = 1;
  spec.fields = {field({"0.5 * sin(x1)"}), field({"1 + 0.2 * cos(x1)"})};
  spec.cost.function = conjpt::make_expression_function("0.5 * u1^2 + u1^4 / 12 + 0.2 * x1 * u1 + 0.1 * x1^2",
                                                        {"x1", "u1"});
  spec.terminal.function = conjpt::make_expression_function("cos(x1) + 0.1 * x1^3", {"x1"});
  spec.check();
  return spec;
}

inline conjpt::ProblemSpec cov_problem(const std::string& lagrangian, const std::string& terminal, int n,
                                       double horizon = 1.0) {
  return conjpt::make_calculus_of_variations_problem(
      conjpt::make_expression_function(lagrangian, conjpt::expr::numbered_names("u", n)),
      conjpt::make_expression_function(terminal, conjpt::expr::numbered_names("z", n)), horizon);
}

/// Root of the increasing function f on [lo, hi] by bisection.
template <class F>
double bisect(F f, double lo, double hi, double tol = 1e-14) {
  double flo = f(lo);
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace testing
