#pragma once

// Fourth-order central difference stencils, generic over the value type
// (double, Vec, Mat, Tensor3 ... anything with +, - and scalar *).

#include <algorithm>
#include <cmath>
#include <limits>
#include <type_traits>

#include "conjpt/jet.hpp"

namespace conjpt::fd {

/// h = eps^(1/3) * max(1, |x|).
inline double default_step(const Vec& x) {
  static const double base = std::cbrt(std::numeric_limits<double>::epsilon());
  return base * std::max(1.0, x.norm());
}

/// d/dt g(t) at t = 0 from g(+-h), g(+-2h).
template <class G>
auto derivative(G&& g, double h) {
  using R = std::decay_t<decltype(g(h))>;
  const R gp1 = g(h);
  const R gm1 = g(-h);
  const R gp2 = g(2.0 * h);
  const R gm2 = g(-2.0 * h);
  R out = (1.0 / (12.0 * h)) * ((8.0 * (gp1 - gm1)) - (gp2 - gm2));
  return out;
}

/// Partial derivative of f at x along coordinate i.
template <class F>
auto partial(F&& f, const Vec& x, int i, double h) {
  return derivative(
      [&](double t) {
        Vec y = x;
        y[i] += t;
        return f(y);
      },
      h);
}

/// Directional derivative of f at x along d.
template <class F>
auto directional(F&& f, const Vec& x, const Vec& d, double h) {
  return derivative([&](double t) { return f(Vec(x + t * d)); }, h);
}

}  // namespace conjpt::fd
