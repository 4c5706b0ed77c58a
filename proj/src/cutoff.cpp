#include "conjpt/cutoff.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace conjpt {

namespace {

// Truncated Taylor series c0 + c1 t + ... + c4 t^4 of a univariate function.
struct Taylor {
  std::array<double, 5> c{};

  static Taylor variable(double x0) {
    Taylor t;
    t.c[0] = x0;
    t.c[1] = 1.0;
    return t;
  }
  static Taylor constant(double v) {
    Taylor t;
    t.c[0] = v;
    return t;
  }
};

Taylor operator+(const Taylor& a, const Taylor& b) {
  Taylor r;
  for (int k = 0; k < 5; ++k) r.c[k] = a.c[k] + b.c[k];
  return r;
}

Taylor operator-(const Taylor& a, const Taylor& b) {
  Taylor r;
  for (int k = 0; k < 5; ++k) r.c[k] = a.c[k] - b.c[k];
  return r;
}

Taylor operator-(const Taylor& a) { return Taylor::constant(0.0) - a; }

Taylor operator/(const Taylor& a, const Taylor& b) {
  Taylor r;
  for (int k = 0; k < 5; ++k) {
    double s = a.c[k];
    for (int j = 1; j <= k; ++j) s -= b.c[j] * r.c[k - j];
    r.c[k] = s / b.c[0];
  }
  return r;
}

Taylor exp(const Taylor& a) {
  Taylor r;
  r.c[0] = std::exp(a.c[0]);
  for (int k = 1; k < 5; ++k) {
    double s = 0.0;
    for (int j = 1; j <= k; ++j) s += j * a.c[j] * r.c[k - j];
    r.c[k] = s / k;
  }
  return r;
}

Taylor sqrt(const Taylor& a) {
  Taylor r;
  r.c[0] = std::sqrt(a.c[0]);
  for (int k = 1; k < 5; ++k) {
    double s = a.c[k];
    for (int j = 1; j < k; ++j) s -= r.c[j] * r.c[k - j];
    r.c[k] = s / (2.0 * r.c[0]);
  }
  return r;
}

// exp(-1/s) for s > 0; treated as identically zero once it underflows.
Taylor flat_exp(const Taylor& s) {
  if (s.c[0] < 1.0 / 600.0) return Taylor::constant(0.0);
  return exp(-(Taylor::constant(1.0) / s));
}

Taylor smoothstep(const Taylor& s) {
  const Taylor a = flat_exp(s);
  const Taylor b = flat_exp(Taylor::constant(1.0) - s);
  return a / (a + b);
}

std::array<double, 5> to_derivatives(const Taylor& t) {
  static constexpr std::array<double, 5> factorial{1.0, 1.0, 2.0, 6.0, 24.0};
  std::array<double, 5> d{};
  for (int k = 0; k < 5; ++k) d[k] = t.c[k] * factorial[k];
  return d;
}

}  // namespace

std::array<double, 5> smoothstep_derivatives(double s) {
  if (s <= 0.0) return {0.0, 0.0, 0.0, 0.0, 0.0};
  if (s >= 1.0) return {1.0, 0.0, 0.0, 0.0, 0.0};
  return to_derivatives(smoothstep(Taylor::variable(s)));
}

double smooth_cutoff(const Vec& y) { return smooth_cutoff_jet(y, 0).value; }

Jet smooth_cutoff_jet(const Vec& y, int order) {
  if (order < 0 || order > 4) throw std::invalid_argument("smooth_cutoff_jet: order must be in [0, 4]");
  const int d = static_cast<int>(y.size());
  Jet out = Jet::zeros(d, order);
  const double rho = y.squaredNorm();
  if (rho <= 1.0) {
    out.value = 1.0;
    return out;
  }
  if (rho >= 4.0) return out;

  // eta(y) = k(|y|^2) with k(rho) = S(2 - sqrt(rho)); k^(j) from the series in rho.
  const Taylor rho_t = Taylor::variable(rho);
  const auto k = to_derivatives(smoothstep(Taylor::constant(2.0) - sqrt(rho_t)));

  out.value = k[0];
  auto delta = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  for (int i = 0; i < d && order >= 1; ++i) out.grad[i] = 2.0 * y[i] * k[1];
  if (order >= 2)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) out.hess(i, j) = 4.0 * y[i] * y[j] * k[2] + 2.0 * delta(i, j) * k[1];
  if (order >= 3)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int l = 0; l < d; ++l)
          out.third(i, j, l) = 8.0 * y[i] * y[j] * y[l] * k[3] +
                               4.0 * (delta(i, j) * y[l] + delta(i, l) * y[j] + delta(j, l) * y[i]) * k[2];
  if (order >= 4)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int l = 0; l < d; ++l)
          for (int m = 0; m < d; ++m) {
            const double pairs = delta(i, j) * y[l] * y[m] + delta(i, l) * y[j] * y[m] + delta(i, m) * y[j] * y[l] +
                                 delta(j, l) * y[i] * y[m] + delta(j, m) * y[i] * y[l] + delta(l, m) * y[i] * y[j];
            const double doubles = delta(i, j) * delta(l, m) + delta(i, l) * delta(j, m) + delta(i, m) * delta(j, l);
            out.fourth(i, j, l, m) =
                16.0 * y[i] * y[j] * y[l] * y[m] * k[4] + 8.0 * pairs * k[3] + 4.0 * doubles * k[2];
          }
  return out;
}

CutoffFunction::CutoffFunction(FunctionPtr base, double radius) : base_(std::move(base)), radius_(radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("CutoffFunction: radius must be positive");
}

Jet CutoffFunction::jet(const Vec& x, int order) const {
  Jet eta = smooth_cutoff_jet(x / radius_, order);
  // Chain rule for y = x / R: each derivative order picks up a factor 1/R.
  const double s = 1.0 / radius_;
  if (order >= 1) eta.grad *= s;
  if (order >= 2) eta.hess *= s * s;
  if (order >= 3) eta.third *= s * s * s;
  if (order >= 4) eta.fourth *= s * s * s * s;
  return product(base_->jet(x, order), eta);
}

}  // namespace conjpt
