#include "conjpt/smooth_function.hpp"

#include <algorithm>
#include <stdexcept>

#include "conjpt/finite_difference.hpp"

namespace conjpt {

namespace {

int count_sorted(int dim, int order) {
  int n = 0;
  for_each_sorted_index(dim, order, [&](std::span<const int>) { ++n; });
  return n;
}

// Averages a (possibly slightly asymmetric) derivative block over all index
// permutations.
void symmetrize(Jet& jet, int order) {
  const int d = jet.dim();
  for_each_sorted_index(d, order, [&](std::span<const int> idx) {
    int p[4];
    std::copy(idx.begin(), idx.end(), p);
    double s = 0.0;
    int count = 0;
    do {
      s += jet.partial(std::span<const int>(p, idx.size()));
      ++count;
    } while (std::next_permutation(p, p + order));
    set_symmetric(jet, idx, s / count);
  });
}

}  // namespace

ExpressionFunction::ExpressionFunction(expr::Expr e, int dim, int max_order)
    : expr_(std::move(e)), dim_(dim), max_order_(max_order) {
  if (dim < 1) throw std::invalid_argument("ExpressionFunction: dimension must be positive");
  if (max_order < 0 || max_order > 4) throw std::invalid_argument("ExpressionFunction: order must be in [0, 4]");
  if (expr::max_variable(expr_) >= dim) throw std::invalid_argument("ExpressionFunction: variable index exceeds dimension");

  trees_.resize(static_cast<std::size_t>(max_order_) + 1);
  trees_[0].push_back(expr_);
  for (int k = 1; k <= max_order_; ++k) {
    // D_{i1..ik} = d/dx_{ik} D_{i1..i(k-1)}; parents are sorted, so look them up by slot.
    trees_[static_cast<std::size_t>(k)].reserve(static_cast<std::size_t>(count_sorted(dim_, k)));
    for_each_sorted_index(dim_, k, [&](std::span<const int> idx) {
      if (idx.empty()) return;
      const std::size_t last = idx.size() - 1;
      const expr::Expr& parent = trees_[last][slot(idx.first(last))];
      trees_[idx.size()].push_back(expr::differentiate(parent, idx[last]));
    });
  }
  programs_.resize(trees_.size());
  for (std::size_t k = 0; k < trees_.size(); ++k)
    for (const auto& t : trees_[k]) programs_[k].emplace_back(t);
}

std::size_t ExpressionFunction::slot(std::span<const int> sorted_idx) const {
  // Rank of a sorted multi-index in lexicographic enumeration.
  const int k = static_cast<int>(sorted_idx.size());
  std::size_t rank = 0;
  int lo = 0;
  for (int pos = 0; pos < k; ++pos) {
    for (int v = lo; v < sorted_idx[static_cast<std::size_t>(pos)]; ++v)
      rank += static_cast<std::size_t>(count_sorted(dim_ - v, k - pos - 1));
    lo = sorted_idx[static_cast<std::size_t>(pos)];
  }
  return rank;
}

const expr::Expr& ExpressionFunction::derivative(std::span<const int> sorted_idx) const {
  const int k = static_cast<int>(sorted_idx.size());
  if (k > max_order_) throw std::out_of_range("ExpressionFunction::derivative: order above max_order");
  return trees_[static_cast<std::size_t>(k)][slot(sorted_idx)];
}

Jet ExpressionFunction::jet(const Vec& x, int order) const {
  if (x.size() != dim_) throw std::invalid_argument("ExpressionFunction::jet: dimension mismatch");
  if (order > max_order_) {
    Jet j = finite_difference_jet(*this, x, order);
    return j;
  }
  const std::span<const double> pt(x.data(), static_cast<std::size_t>(x.size()));
  Jet out = Jet::zeros(dim_, order);
  out.value = programs_[0][0](pt);
  for (int k = 1; k <= order; ++k) {
    const auto& progs = programs_[static_cast<std::size_t>(k)];
    std::size_t s = 0;
    for_each_sorted_index(dim_, k, [&](std::span<const int> idx) { set_symmetric(out, idx, progs[s++](pt)); });
  }
  return out;
}

FunctionPtr make_expression_function(const std::string& text, const std::vector<std::string>& names, int max_order) {
  return std::make_shared<ExpressionFunction>(expr::parse(text, names), static_cast<int>(names.size()), max_order);
}

// ---------------------------------------------------------------------------

CallbackFunction::CallbackFunction(int dim, Callbacks callbacks) : dim_(dim), cb_(std::move(callbacks)) {
  if (!cb_.value) throw std::invalid_argument("CallbackFunction: value callback is required");
}

int CallbackFunction::analytic_order() const {
  if (!cb_.gradient) return 0;
  if (!cb_.hessian) return 1;
  if (!cb_.third) return 2;
  if (!cb_.fourth) return 3;
  return 4;
}

Vec CallbackFunction::gradient_at(const Vec& x) const {
  if (cb_.gradient) return cb_.gradient(x);
  const double h = fd::default_step(x);
  Vec g(dim_);
  for (int i = 0; i < dim_; ++i) g[i] = fd::partial(cb_.value, x, i, h);
  return g;
}

Mat CallbackFunction::hessian_at(const Vec& x) const {
  if (cb_.hessian) return cb_.hessian(x);
  const double h = fd::default_step(x);
  Mat H(dim_, dim_);
  for (int i = 0; i < dim_; ++i) H.col(i) = fd::partial([&](const Vec& y) { return gradient_at(y); }, x, i, h);
  return 0.5 * (H + H.transpose());
}

Tensor3 CallbackFunction::third_at(const Vec& x) const {
  if (cb_.third) return cb_.third(x);
  const double h = fd::default_step(x);
  Tensor3 T(dim_);
  for (int k = 0; k < dim_; ++k) {
    const Mat slice = fd::partial([&](const Vec& y) { return hessian_at(y); }, x, k, h);
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j) T(i, j, k) = slice(i, j);
  }
  return T;
}

Tensor4 CallbackFunction::fourth_at(const Vec& x) const {
  if (cb_.fourth) return cb_.fourth(x);
  const double h = fd::default_step(x);
  Tensor4 Q(dim_);
  for (int l = 0; l < dim_; ++l) {
    const Tensor3 slice = fd::partial([&](const Vec& y) { return third_at(y); }, x, l, h);
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j)
        for (int k = 0; k < dim_; ++k) Q(i, j, k, l) = slice(i, j, k);
  }
  return Q;
}

Jet CallbackFunction::jet(const Vec& x, int order) const {
  if (x.size() != dim_) throw std::invalid_argument("CallbackFunction::jet: dimension mismatch");
  Jet out = Jet::zeros(dim_, order);
  out.value = cb_.value(x);
  if (order >= 1) out.grad = gradient_at(x);
  if (order >= 2) out.hess = hessian_at(x);
  if (order >= 3) {
    out.third = third_at(x);
    if (!cb_.third) symmetrize(out, 3);
  }
  if (order >= 4) {
    out.fourth = fourth_at(x);
    if (!cb_.fourth) symmetrize(out, 4);
  }
  return out;
}

// ---------------------------------------------------------------------------

Jet finite_difference_jet(const SmoothFunction& f, const Vec& x, int order) {
  if (order < 1 || order > 4) throw std::invalid_argument("finite_difference_jet: order must be in [1, 4]");
  const int d = f.dim();
  const Jet lower = f.jet(x, order - 1);
  Jet out = Jet::zeros(d, order);
  out.value = lower.value;
  if (order >= 2) out.grad = lower.grad;
  if (order >= 3) out.hess = lower.hess;
  if (order >= 4) out.third = lower.third;

  const double h = fd::default_step(x);
  for (int i = 0; i < d; ++i) {
    auto shifted = [&](double t) {
      Vec y = x;
      y[i] += t;
      return f.jet(y, order - 1);
    };
    switch (order) {
      case 1:
        out.grad[i] = fd::derivative([&](double t) { return shifted(t).value; }, h);
        break;
      case 2:
        out.hess.col(i) = fd::derivative([&](double t) { return shifted(t).grad; }, h);
        break;
      case 3: {
        const Mat s = fd::derivative([&](double t) { return shifted(t).hess; }, h);
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b) out.third(a, b, i) = s(a, b);
        break;
      }
      case 4: {
        const Tensor3 s = fd::derivative([&](double t) { return shifted(t).third; }, h);
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b)
            for (int c = 0; c < d; ++c) out.fourth(a, b, c, i) = s(a, b, c);
        break;
      }
    }
  }
  if (order >= 2) symmetrize(out, order);
  return out;
}

}  // namespace conjpt
