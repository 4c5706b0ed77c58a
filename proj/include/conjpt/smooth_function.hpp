#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "conjpt/expr.hpp"
#include "conjpt/jet.hpp"

namespace conjpt {

/// A scalar C^k function on R^d that can report its derivatives up to order 4.
///
/// `analytic_order()` is the highest order supplied exactly; `jet` may still be
/// asked for more, in which case implementations fill the missing orders with
/// fourth-order central differences of the order below.
class SmoothFunction {
 public:
  virtual ~SmoothFunction() = default;

  virtual int dim() const = 0;
  virtual int analytic_order() const = 0;
  virtual Jet jet(const Vec& x, int order) const = 0;

  double value(const Vec& x) const { return jet(x, 0).value; }
  Vec gradient(const Vec& x) const { return jet(x, 1).grad; }
  Mat hessian(const Vec& x) const { return jet(x, 2).hess; }
};

using FunctionPtr = std::shared_ptr<const SmoothFunction>;

/// Function defined by an expression; all derivatives are symbolic.
class ExpressionFunction final : public SmoothFunction {
 public:
  ExpressionFunction(expr::Expr e, int dim, int max_order = 4);

  int dim() const override { return dim_; }
  int analytic_order() const override { return max_order_; }
  Jet jet(const Vec& x, int order) const override;

  const expr::Expr& expression() const { return expr_; }
  /// Derivative tree for a sorted multi-index (for inspection and tests).
  const expr::Expr& derivative(std::span<const int> sorted_idx) const;

 private:
  std::size_t slot(std::span<const int> sorted_idx) const;

  expr::Expr expr_;
  int dim_;
  int max_order_;
  // Trees and tapes for every sorted multi-index, order by order.
  std::vector<std::vector<expr::Expr>> trees_;
  std::vector<std::vector<expr::Program>> programs_;
};

/// Parses `text` over `names` and wraps it as a SmoothFunction.
FunctionPtr make_expression_function(const std::string& text, const std::vector<std::string>& names,
                                     int max_order = 4);

/// User-supplied callbacks. Any derivative callback may be left empty; the
/// missing order is then a finite difference of the order below with step
/// eps^(1/3) * max(1, |x|). Nesting several missing orders compounds the error.
class CallbackFunction final : public SmoothFunction {
 public:
  using ValueFn = std::function<double(const Vec&)>;
  using GradFn = std::function<Vec(const Vec&)>;
  using HessFn = std::function<Mat(const Vec&)>;
  using ThirdFn = std::function<Tensor3(const Vec&)>;
  using FourthFn = std::function<Tensor4(const Vec&)>;

  struct Callbacks {
    ValueFn value;
    GradFn gradient;
    HessFn hessian;
    ThirdFn third;
    FourthFn fourth;
  };

  CallbackFunction(int dim, Callbacks callbacks);

  int dim() const override { return dim_; }
  int analytic_order() const override;
  Jet jet(const Vec& x, int order) const override;

 private:
  Vec gradient_at(const Vec& x) const;
  Mat hessian_at(const Vec& x) const;
  Tensor3 third_at(const Vec& x) const;
  Tensor4 fourth_at(const Vec& x) const;

  int dim_;
  Callbacks cb_;
};

/// Finite-difference derivative of order k from the jet of order k-1 of `f`
/// (the same stencil the callback fallback uses). Order must be 1..4; the
/// returned jet carries only that order filled in, lower orders as computed.
Jet finite_difference_jet(const SmoothFunction& f, const Vec& x, int order);

}  // namespace conjpt
