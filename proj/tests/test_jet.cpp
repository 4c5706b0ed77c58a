#include <doctest.h>

#include <cmath>
#include <random>

#include "conjpt/cutoff.hpp"
#include "conjpt/jet.hpp"
#include "conjpt/smooth_function.hpp"

using namespace conjpt;

namespace {

double max_diff(const Jet& a, const Jet& b, int order) {
  double d = std::abs(a.value - b.value);
  if (order >= 1) d = std::max(d, (a.grad - b.grad).cwiseAbs().maxCoeff());
  if (order >= 2) d = std::max(d, (a.hess - b.hess).cwiseAbs().maxCoeff());
  if (order >= 3) d = std::max(d, (a.third - b.third).max_abs());
  if (order >= 4) d = std::max(d, (a.fourth - b.fourth).max_abs());
  return d;
}

// Reference smoothstep evaluated directly from its definition.
double smoothstep_reference(double s) {
  auto e = [](double t) { return t > 0 ? std::exp(-1.0 / t) : 0.0; };
  return e(s) / (e(s) + e(1.0 - s));
}

}  // namespace

TEST_CASE("expression jets are symmetric and match finite differences") {
  const auto f = make_expression_function("sin(x1) * x2^3 + exp(x1 * x3) - x2 * x3^2", {"x1", "x2", "x3"});
  const Vec x = (Vec(3) << 0.3, -0.8, 0.5).finished();
  const Jet j = f->jet(x, 4);
  for (int order = 1; order <= 4; ++order) {
    const Jet fd = finite_difference_jet(*f, x, order);
    CHECK(max_diff(j, fd, order) < 1e-7);
  }
  CHECK(j.third(0, 1, 2) == j.third(2, 0, 1));
  CHECK(j.fourth(0, 0, 2, 2) == j.fourth(2, 0, 2, 0));
  // d^4/dx1^4 of sin(x1) x2^3 + exp(x1 x3) = sin(x1) x2^3 + x3^4 exp(x1 x3).
  CHECK(j.fourth(0, 0, 0, 0) == doctest::Approx(std::sin(0.3) * -0.512 + std::pow(0.5, 4) * std::exp(0.15)));
}

TEST_CASE("Leibniz product agrees with the jet of the product expression") {
  const std::vector<std::string> names{"a", "b"};
  const auto f = make_expression_function("sin(a) + a * b^2", names);
  const auto g = make_expression_function("exp(b - a) + a^3", names);
  const auto fg = make_expression_function("(sin(a) + a * b^2) * (exp(b - a) + a^3)", names);
  const Vec x = (Vec(2) << -0.4, 1.2).finished();
  const Jet p = product(f->jet(x, 4), g->jet(x, 4));
  CHECK(max_diff(p, fg->jet(x, 4), 4) < 1e-12);
  const Jet s = sum(f->jet(x, 3), g->jet(x, 3));
  CHECK(s.third(0, 1, 1) == doctest::Approx(f->jet(x, 3).third(0, 1, 1) + g->jet(x, 3).third(0, 1, 1)));
}

TEST_CASE("tensor contractions") {
  Tensor3 t(2);
  t(0, 0, 0) = 1;
  t(0, 1, 1) = 2;
  t(1, 0, 1) = 2;
  t(1, 1, 0) = 2;
  const Vec a = (Vec(2) << 1.0, 3.0).finished();
  // T(a,a,a) = a0^3 + 3 * 2 * a0 a1^2
  CHECK(t.contract(a, a, a) == doctest::Approx(1 + 6 * 9));
  CHECK(t.contract(a, a)[0] == doctest::Approx(1 + 2 * 9));
  CHECK(t.contract(a)(1, 1) == doctest::Approx(2));
}

TEST_CASE("callback functions fill missing orders by finite differences") {
  CallbackFunction::Callbacks cb;
  cb.value = [](const Vec& x) { return std::cos(x[0]) * x[1] * x[1]; };
  cb.gradient = [](const Vec& x) {
    return Vec((Vec(2) << -std::sin(x[0]) * x[1] * x[1], 2 * std::cos(x[0]) * x[1]).finished());
  };
  const CallbackFunction f(2, cb);
  CHECK(f.analytic_order() == 1);
  const auto ref = make_expression_function("cos(x) * y^2", {"x", "y"});
  const Vec x = (Vec(2) << 0.4, -1.5).finished();
  CHECK(max_diff(f.jet(x, 2), ref->jet(x, 2), 2) < 1e-8);
  CHECK(max_diff(f.jet(x, 3), ref->jet(x, 3), 3) < 1e-4);
}

TEST_CASE("smoothstep and cutoff values") {
  for (double s : {0.1, 0.25, 0.5, 0.8, 0.95}) CHECK(smoothstep_derivatives(s)[0] == doctest::Approx(smoothstep_reference(s)));
  CHECK(smoothstep_derivatives(0.5)[0] == doctest::Approx(0.5));
  CHECK(smoothstep_derivatives(-1.0)[0] == 0.0);
  CHECK(smoothstep_derivatives(2.0)[0] == 1.0);
  CHECK(smooth_cutoff((Vec(2) << 0.5, 0.5).finished()) == 1.0);
  CHECK(smooth_cutoff((Vec(2) << 2.0, 0.1).finished()) == 0.0);
  const Vec mid = (Vec(2) << 1.5, 0.0).finished();
  CHECK(smooth_cutoff(mid) == doctest::Approx(smoothstep_reference(0.5)));
}

TEST_CASE("smoothstep derivatives match finite differences of the reference") {
  const double h = 1e-3;
  for (double s : {0.2, 0.45, 0.7}) {
    const auto d = smoothstep_derivatives(s);
    auto S = smoothstep_reference;
    const double d1 = (8 * (S(s + h) - S(s - h)) - (S(s + 2 * h) - S(s - 2 * h))) / (12 * h);
    const double d2 = (-S(s + 2 * h) + 16 * S(s + h) - 30 * S(s) + 16 * S(s - h) - S(s - 2 * h)) / (12 * h * h);
    CHECK(d[1] == doctest::Approx(d1).epsilon(1e-7));
    CHECK(d[2] == doctest::Approx(d2).epsilon(1e-5));
  }
}

TEST_CASE("cutoff jets match finite differences in the transition annulus") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.9, 1.9);
  int tested = 0;
  while (tested < 10) {
    Vec y(3);
    for (int i = 0; i < 3; ++i) y[i] = u(rng);
    const double r = y.norm();
    if (r < 1.05 || r > 1.95) continue;
    ++tested;
    const Jet j = smooth_cutoff_jet(y, 4);
    CallbackFunction eta(3, {[](const Vec& z) { return smooth_cutoff(z); }, {}, {}, {}, {}});
    struct Wrapped final : SmoothFunction {
      int dim() const override { return 3; }
      int analytic_order() const override { return 4; }
      Jet jet(const Vec& z, int order) const override { return smooth_cutoff_jet(z, order); }
    } wrapped;
    for (int order = 1; order <= 4; ++order) {
      const Jet fd = finite_difference_jet(wrapped, y, order);
      CHECK(max_diff(j, fd, order) < 1e-6 * std::max(1.0, j.fourth.max_abs()));
    }
    CHECK((eta.jet(y, 1).grad - j.grad).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("cutoff function agrees with base inside and vanishes outside") {
  const auto base = make_expression_function("x1^3 - x2", {"x1", "x2"});
  const CutoffFunction cut(base, 2.0);
  const Vec inside = (Vec(2) << 1.0, -1.0).finished();
  const Vec outside = (Vec(2) << 3.0, 3.0).finished();
  CHECK(max_diff(cut.jet(inside, 4), base->jet(inside, 4), 4) == 0.0);
  CHECK(max_diff(cut.jet(outside, 4), Jet::zeros(2, 4), 4) == 0.0);
  const Vec annulus = (Vec(2) << 2.5, 1.0).finished();
  for (int order = 1; order <= 4; ++order) {
    const Jet fd = finite_difference_jet(cut, annulus, order);
    CHECK(max_diff(cut.jet(annulus, order), fd, order) < 1e-6);
  }
}
