#pragma once

// Calculus-of-variations case: x' = u, running cost L(u). The extremals are
// straight lines, so everything follows from the Hamiltonian
// H(p) = min_w { L(w) + p . w } in closed form:
//
//   x(0,z) = z - T DH(grad psi(z)),   x_z(0,z) = I - T D2H D2psi,   p_z = D2psi,
//   x_zz(0,z)(v,v) = -T D2H D3psi(v,v) - T D3H(D2psi v, D2psi v).
//
// On top of that: the map Phi(z, v) = (x_z v, D2H^{-1} v . x_zz(v,v)) whose zero
// set Omega contains every conjugate point, a multistart solver for its zeros,
// the numerical transversality test, the localized perturbation family of
// terminal costs and a box count of the conjugate image.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "conjpt/parallel.hpp"
#include "conjpt/pontryagin.hpp"
#include "conjpt/smooth_function.hpp"

namespace conjpt {

struct HamiltonianDerivatives {
  Vec minimizer;
  double value = 0.0;
  /// DH = minimizer.
  Vec gradient;
  /// D2H = -L_uu(minimizer)^{-1}.
  Mat hessian;
  /// D3H_ijk = sum D2H_ia D2H_jb D2H_kc L_abc.
  Tensor3 third;
  /// L_uu at the minimizer, i.e. -D2H^{-1}.
  Mat lagrangian_hessian;
};

/// Legendre-type Hamiltonian of a uniformly convex Lagrangian L: R^n -> R.
class HamiltonianModel {
 public:
  explicit HamiltonianModel(FunctionPtr lagrangian, NewtonOptions newton = {});

  int dim() const { return lagrangian_->dim(); }
  const SmoothFunction& lagrangian() const { return *lagrangian_; }
  const FunctionPtr& lagrangian_ptr() const { return lagrangian_; }

  /// argmin_w L(w) + p . w by damped Newton on L_u(w) = -p.
  Vec minimizer(const Vec& p, const Vec& guess = Vec()) const;
  HamiltonianDerivatives derivatives(const Vec& p, int order = 3) const;

 private:
  FunctionPtr lagrangian_;
  NewtonOptions newton_;
};

Vec legendre_minimizer(const HamiltonianModel& model, const Vec& p);
HamiltonianDerivatives hamiltonian_derivatives(const HamiltonianModel& model, const Vec& p);

struct CovProblem {
  HamiltonianModel model;
  FunctionPtr terminal;
  double horizon = 1.0;

  int dim() const { return terminal->dim(); }
  /// The same problem for the general solver (x' = u, L lifted to (x, u)).
  ProblemSpec to_problem_spec() const;
};

struct ClosedForms {
  Vec x0;
  Mat x_z;
  Mat p_z;
  std::optional<Vec> x_zz_vv;
};

ClosedForms closed_forms(const CovProblem& problem, const Vec& z, const std::optional<Vec>& v = std::nullopt);

/// Phi(z, v) in R^{n+1}.
Vec phi(const CovProblem& problem, const Vec& z, const Vec& v);

/// Flips v so that its largest-magnitude entry is positive. Phi is odd in v,
/// so zeros come in pairs (z, +-v); this picks one representative.
Vec canonical_direction(const Vec& v);

struct OmegaPoint {
  Vec z;
  Vec v;
  double residual = 0.0;
  /// Singular values of DPhi restricted to R^n x T_v S^{n-1}, descending.
  Vec jacobian_singular_values;
  bool transversal = false;
  /// x(0, z).
  Vec conjugate_image;
};

struct OmegaOptions {
  double box_radius = 3.0;
  /// Grid seeds per axis on [-k, k]^n, kept if inside the closed ball.
  int seeds_per_axis = 20;
  /// Directions on the circle for n = 2; for other n, the number of
  /// quasi-uniform directions on the sphere. Only one of each antipodal pair is
  /// used.
  int directions = 32;
  double accept_residual = 1e-9;
  double dedup_distance = 1e-5;
  int max_iterations = 60;
  /// Finite-difference step for the Jacobian inside Gauss-Newton.
  double gn_step = 1e-6;
  /// Fourth-order finite-difference step for the transversality Jacobian.
  double transversality_step = 1e-4;
  double transversality_ratio = 1e-6;
  Execution execution = Execution::parallel;
};

struct OmegaSeed {
  Vec z;
  Vec v;
};

/// Multistart seeds on the closed ball times half the direction set.
std::vector<OmegaSeed> omega_seeds(int n, const OmegaOptions& options);

/// One Gauss-Newton solve of Phi = 0 with v retracted to the sphere. Returns
/// the final point with its residual; acceptance is up to the caller.
OmegaPoint omega_newton(const CovProblem& problem, const OmegaSeed& seed, const OmegaOptions& options);

/// Accepted, deduplicated, canonically oriented zeros of Phi in the closed
/// ball, each passed through transversality_check. Sorted lexicographically by z.
std::vector<OmegaPoint> omega_solve(const CovProblem& problem, const OmegaOptions& options,
                                    const std::vector<OmegaSeed>& seeds);
std::vector<OmegaPoint> omega_solve(const CovProblem& problem, const OmegaOptions& options = {});

/// Builds the (n+1) x (2n-1) Jacobian by fourth-order differences and fills
/// the singular values, the verdict and the conjugate image.
OmegaPoint transversality_check(const CovProblem& problem, OmegaPoint point, const OmegaOptions& options = {});

/// For n = 3, where the transversal part of Omega is a union of curves:
/// samples those curves by predictor-corrector continuation from the
/// transversal entries of `points`, about `step` apart in (z, v). Starts that lie
/// within 2 steps of an already traced curve are skipped, and a branch stops at
/// the ball boundary, at a non-transversal point or when it closes.
std::vector<OmegaPoint> omega_trace(const CovProblem& problem, const std::vector<OmegaPoint>& points,
                                    const OmegaOptions& options = {}, double step = 0.02, int max_steps = 5000);

/// Localized quadratic and cubic perturbations around anchors:
/// psi(z) + sum_l eta(z - a_l) [ sum_ij Q_ij d_i d_j + sum_k c_k d_k^3 ], d = z - a_l.
struct PerturbationParams {
  std::vector<Vec> anchors;
  /// One n x n matrix per anchor (may be empty for cubic-only families).
  std::vector<Mat> quadratic;
  /// One length-n vector per anchor.
  std::vector<Vec> cubic;
};

class PerturbedFunction final : public SmoothFunction {
 public:
  PerturbedFunction(FunctionPtr base, PerturbationParams params);
  int dim() const override { return base_->dim(); }
  int analytic_order() const override { return base_->analytic_order(); }
  Jet jet(const Vec& z, int order) const override;
  const PerturbationParams& params() const { return params_; }

 private:
  FunctionPtr base_;
  PerturbationParams params_;
};

FunctionPtr perturb_psi(FunctionPtr psi, PerturbationParams params);

enum class PerturbationKind { cubic, full };

struct GenericityOptions {
  int trials = 100;
  double magnitude = 1e-2;
  std::uint64_t seed = 1;
  PerturbationKind kind = PerturbationKind::cubic;
  /// Anchors; when empty they are placed at the non-transversal zeros of the
  /// unperturbed problem (all zeros if none is degenerate, the origin if Omega is empty).
  std::vector<Vec> anchors;
  OmegaOptions omega;
  Execution execution = Execution::parallel;
};

struct GenericityTrial {
  int index = 0;
  double theta_norm = 0.0;
  int zeros = 0;
  int non_transversal = 0;
  bool success = false;
};

struct GenericityReport {
  std::vector<Vec> anchors;
  /// The theta = 0 control run.
  int baseline_zeros = 0;
  int baseline_non_transversal = 0;
  std::vector<GenericityTrial> trials;
  double success_fraction = 0.0;
};

GenericityReport genericity_experiment(const CovProblem& problem, const GenericityOptions& options);

struct BoxCount {
  std::vector<double> epsilons;
  std::vector<std::size_t> counts;
  /// Least-squares slope of log N(eps) against log(1/eps); 0 when fewer than
  /// two nonzero counts.
  double slope = 0.0;
};

/// Counts occupied eps-boxes of the conjugate images of `points`.
BoxCount conjugate_image_boxcount(const std::vector<OmegaPoint>& points, const std::vector<double>& epsilons);

}  // namespace conjpt
