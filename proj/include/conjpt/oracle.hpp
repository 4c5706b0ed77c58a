#pragma once

// Independent check of the variational machinery: freeze the optimal control
// of the extremal ending at z, run it from the initial point of the extremal
// ending at zbar, and take the cost,
//
//   g(z, zbar) = int_0^T L(x~, u(t, z)) dt + psi(x~(T)),   x~' = f(x~, u(t, z)),  x~(0) = x(0, zbar).
//
// Along a kernel direction v of x_z(0, zbar), g_v(theta) = g(zbar + theta v, zbar)
// has vanishing first and second derivatives at 0 and g_v'''(0) = -kappa.
// Only solve_extremal is trusted here.

#include <vector>

#include "conjpt/conjugate.hpp"
#include "conjpt/pontryagin.hpp"

namespace conjpt {

struct ReplayResult {
  Vec z;
  Vec zbar;
  /// x~ at the grid nodes.
  std::vector<Vec> trajectory;
  double cost = 0.0;
};

/// Replays the control of `control_source` from `start` (forward RK4 on the
/// same grid, Simpson quadrature with Hermite midpoints).
ReplayResult replay(const ProblemSpec& spec, const ExtremalTrajectory& control_source, const Vec& start);

ReplayResult replay_cost(const ProblemSpec& spec, const Vec& z, const Vec& zbar, int steps = 400);

struct GDerivatives {
  double g0 = 0.0;
  double g1 = 0.0;
  double g2 = 0.0;
  double g3 = 0.0;
};

struct OracleOptions {
  double h = 1e-2;
  int steps = 400;
  Execution execution = Execution::parallel;
};

/// Central differences of g_v at 0 with step h, each Richardson-extrapolated
/// with the step h/2.
GDerivatives g_derivatives(const ProblemSpec& spec, const Vec& zbar, const Vec& v, const OracleOptions& options = {});

struct LemmaReport {
  GDerivatives g;
  double kappa = 0.0;
  double first_order_tolerance = 0.0;
  double third_order_tolerance = 0.0;
  bool pass = false;
};

/// Passes iff |g'|, |g''| <= 1e-5 (1 + |g(0)|) and |g''' + kappa| <= max(1e-3, 1e-3 |kappa|).
/// A candidate without kappa gets it from necessary_condition.
LemmaReport check_lemma(const ProblemSpec& spec, const ConjugateCandidate& candidate, const OracleOptions& options = {},
                        const ConjugateOptions& conjugate = {});

}  // namespace conjpt
