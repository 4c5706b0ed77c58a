#pragma once

// Conjugate-point candidates: terminal points z where x_z(0, z) is singular,
// with the kernel direction v and the necessary-condition value
// kappa = (p_z(0,z) v) . x_zz(0,z)(v,v), which has to vanish when the extremal
// is a weak local minimizer.

#include <limits>
#include <optional>
#include <vector>

#include "conjpt/cov.hpp"
#include "conjpt/parallel.hpp"
#include "conjpt/pontryagin.hpp"

namespace conjpt {

enum class DetMethod {
  /// solve_extremal + solve_variational.
  pontryagin,
  /// Closed forms; requires a calculus-of-variations problem.
  closed_form,
};

struct ConjugateOptions {
  int steps = 400;
  DetMethod method = DetMethod::pontryagin;
  /// Needed for DetMethod::closed_form.
  std::optional<CovProblem> cov;
  /// Numerical kernel: sigma_min <= singular_ratio * max(1, |x_z|_2). The floor
  /// of 1 keeps the test meaningful for n = 1, where sigma_min = |x_z|.
  double singular_ratio = 1e-6;
  /// Grid nodes below this ratio without an adjacent sign change are refined too.
  double coarse_ratio = 1e-3;
  /// Bracket refinement stops at |det| <= refine_tolerance * scale.
  double refine_tolerance = 1e-10;
  bool compute_kappa = true;
  Execution execution = Execution::parallel;
};

struct DetResult {
  double det = 0.0;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  /// Right singular vector for sigma_min, sign-normalized.
  Vec v;
  Mat x_z;
  Vec x0;
};

DetResult det_xz(const ProblemSpec& spec, const Vec& z, const ConjugateOptions& options = {});

struct ConjugateCandidate {
  Vec z;
  Vec x0;
  double sigma_min = 0.0;
  Vec v;
  double kappa = std::numeric_limits<double>::quiet_NaN();
  double det_value = 0.0;
  /// sigma_min <= singular_ratio * max(1, |x_z|).
  bool accepted = false;
};

struct ScanBox {
  Vec lower;
  Vec upper;
  static ScanBox cube(int n, double radius);
};

/// Dense grid scan for n <= 3 with `resolution` >= 2 nodes per axis. Sign
/// changes of det along grid edges are refined by a safeguarded secant
/// bracket; near-singular nodes without a sign change are refined by
/// coordinate-wise golden-section minimization of sigma_min. Only accepted
/// candidates are returned, ordered by grid position.
std::vector<ConjugateCandidate> scan(const ProblemSpec& spec, const ScanBox& box, int resolution,
                                     const ConjugateOptions& options = {});

/// det(x_z(0, z)) sampled on the scan grid (row-major over axes, axis 0 fastest).
struct DetGrid {
  ScanBox box;
  int resolution = 0;
  std::vector<Vec> nodes;
  std::vector<double> det;
  std::vector<double> sigma_min;
  std::vector<double> sigma_max;
};
DetGrid det_grid(const ProblemSpec& spec, const ScanBox& box, int resolution, const ConjugateOptions& options = {});

/// kappa for a candidate; uses candidate.v as the direction.
double necessary_condition(const ProblemSpec& spec, const ConjugateCandidate& candidate,
                           const ConjugateOptions& options = {});

}  // namespace conjpt
