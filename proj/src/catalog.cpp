#include "conjpt/catalog.hpp"

#include <stdexcept>

#include "conjpt/cutoff.hpp"
#include "conjpt/expr.hpp"

namespace conjpt {

namespace {

CatalogEntry cov_entry(const std::string& name, const std::string& lagrangian, const std::string& terminal, int n,
                       double cutoff_radius = 0.0) {
  CovProblem cov = make_cov_problem(lagrangian, terminal, n, 1.0, cutoff_radius);
  ProblemSpec spec = cov.to_problem_spec();
  return CatalogEntry{name, std::move(spec), std::move(cov)};
}

CatalogEntry affine2d() {
  const auto xs = expr::numbered_names("x", 2);
  auto field = [&](const char* a, const char* b) {
    return VectorField({make_expression_function(a, xs), make_expression_function(b, xs)});
  };
  ProblemSpec spec;
  spec.horizon = 1.0;
  spec.n = 2;
  spec.m = 2;
  spec.fields = {field("x2", "-x1"), field("1", "0"), field("0", "1")};
  spec.cost.function =
      make_expression_function("0.5 * (u1^2 + u2^2) + 0.1 * (x1^2 + x2^2)", {"x1", "x2", "u1", "u2"});
  spec.terminal.function = make_expression_function("cos(z1) + 0.5 * sin(z1 + z2)", {"z1", "z2"});
  spec.check();
  return CatalogEntry{"affine2d", std::move(spec), std::nullopt};
}

}  // namespace

std::vector<std::string> builtin_names() {
  return {"bench1d", "degenerate1d", "trig2d", "cov2d", "trig3d", "quadratic2d", "linear2d", "affine2d"};
}

CatalogEntry builtin_problem(const std::string& name) {
  if (name == "bench1d") return cov_entry(name, "0.5 * u1^2", "-z1^2 / 2 + z1^3 / 6", 1, 5.0);
  if (name == "degenerate1d") return cov_entry(name, "0.5 * u1^2", "-z1^2 / 2 + z1^4 / 24", 1, 5.0);
  if (name == "trig2d" || name == "cov2d")
    return cov_entry(name, "0.5 * (u1^2 + u2^2)", "cos(z1) + 0.5 * sin(z1 + z2)", 2);
  if (name == "trig3d")
    return cov_entry(name, "0.5 * (u1^2 + u2^2 + u3^2)", "cos(z1) + 0.5 * sin(z2 + z3)", 3);
  if (name == "quadratic2d") return cov_entry(name, "0.5 * (u1^2 + u2^2)", "-0.5 * z1^2 + 0.5 * z2^2", 2);
  if (name == "linear2d") return cov_entry(name, "0.5 * (u1^2 + u2^2)", "0.3 * z1 - 0.2 * z2", 2);
  if (name == "affine2d") return affine2d();
  throw std::invalid_argument("unknown built-in problem '" + name + "'");
}

CovProblem make_cov_problem(const std::string& lagrangian, const std::string& terminal, int n, double horizon,
                            double cutoff_radius) {
  if (n < 1) throw std::invalid_argument("make_cov_problem: dimension must be positive");
  FunctionPtr L = make_expression_function(lagrangian, expr::numbered_names("u", n));
  FunctionPtr psi = make_expression_function(terminal, expr::numbered_names("z", n));
  if (cutoff_radius > 0.0) psi = std::make_shared<CutoffFunction>(psi, cutoff_radius);
  return CovProblem{HamiltonianModel(std::move(L)), std::move(psi), horizon};
}

}  // namespace conjpt
