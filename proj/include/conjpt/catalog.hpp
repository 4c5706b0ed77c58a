#pragma once

// Named problems used by the examples, the tests and the CLI.
//
//   bench1d       x' = u, L = u^2/2, psi = -z^2/2 + z^3/6 (cut off outside |z| = 5), T = 1
//   degenerate1d  same with psi = -z^2/2 + z^4/24
//   trig2d        x' = u, L = |u|^2/2, psi = cos z1 + sin(z1 + z2)/2, T = 1   (alias cov2d)
//   trig3d        x' = u, L = |u|^2/2, psi = cos z1 + sin(z2 + z3)/2, T = 1
//   quadratic2d   x' = u, L = |u|^2/2, psi = -z1^2/2 + z2^2/2
//   linear2d      x' = u, L = |u|^2/2, psi = 0.3 z1 - 0.2 z2
//   affine2d      x' = A x + u with A = [[0, 1], [-1, 0]], L = |u|^2/2 + |x|^2/10, psi as trig2d

#include <optional>
#include <string>
#include <vector>

#include "conjpt/cov.hpp"
#include "conjpt/problem.hpp"

namespace conjpt {

struct CatalogEntry {
  std::string name;
  ProblemSpec spec;
  /// Present for calculus-of-variations problems.
  std::optional<CovProblem> cov;
};

std::vector<std::string> builtin_names();

/// Throws std::invalid_argument for an unknown name.
CatalogEntry builtin_problem(const std::string& name);

/// A calculus-of-variations problem from expression text: L over u1..un and
/// psi over z1..zn. A positive `cutoff_radius` multiplies psi by eta(z / R).
CovProblem make_cov_problem(const std::string& lagrangian, const std::string& terminal, int n, double horizon,
                            double cutoff_radius = 0.0);

}  // namespace conjpt
