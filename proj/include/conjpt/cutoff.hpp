#pragma once

#include <array>

#include "conjpt/smooth_function.hpp"

namespace conjpt {

/// C-infinity radial bump: eta(y) = 1 for |y| <= 1, 0 for |y| >= 2, and
/// S(2 - |y|) in between, where S(s) = e(s) / (e(s) + e(1 - s)) and
/// e(s) = exp(-1/s) for s > 0, 0 otherwise.
double smooth_cutoff(const Vec& y);

/// eta and its derivatives up to `order` (<= 4) at y.
Jet smooth_cutoff_jet(const Vec& y, int order);

/// The smoothstep S and its derivatives S, S', ..., S'''' at s.
std::array<double, 5> smoothstep_derivatives(double s);

/// base(z) * eta(z / radius): agrees with `base` on the ball of the given
/// radius and vanishes outside twice that radius.
class CutoffFunction final : public SmoothFunction {
 public:
  CutoffFunction(FunctionPtr base, double radius);

  int dim() const override { return base_->dim(); }
  int analytic_order() const override { return base_->analytic_order(); }
  Jet jet(const Vec& x, int order) const override;

  double radius() const { return radius_; }

 private:
  FunctionPtr base_;
  double radius_;
};

}  // namespace conjpt
