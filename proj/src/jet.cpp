#include "conjpt/jet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace conjpt {

Mat Tensor3::contract(const Vec& a) const {
  Mat out = Mat::Zero(dim_, dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) {
      double s = 0.0;
      for (int k = 0; k < dim_; ++k) s += (*this)(i, j, k) * a[k];
      out(i, j) = s;
    }
  return out;
}

Vec Tensor3::contract(const Vec& a, const Vec& b) const {
  Vec out = Vec::Zero(dim_);
  for (int i = 0; i < dim_; ++i) {
    double s = 0.0;
    for (int j = 0; j < dim_; ++j)
      for (int k = 0; k < dim_; ++k) s += (*this)(i, j, k) * a[j] * b[k];
    out[i] = s;
  }
  return out;
}

double Tensor3::contract(const Vec& a, const Vec& b, const Vec& c) const { return a.dot(contract(b, c)); }

Tensor3& Tensor3::operator+=(const Tensor3& o) {
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}
Tensor3& Tensor3::operator-=(const Tensor3& o) {
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}
Tensor3& Tensor3::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}
double Tensor3::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

Tensor3 Tensor4::contract(const Vec& a) const {
  Tensor3 out(dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j)
      for (int k = 0; k < dim_; ++k) {
        double s = 0.0;
        for (int l = 0; l < dim_; ++l) s += (*this)(i, j, k, l) * a[l];
        out(i, j, k) = s;
      }
  return out;
}

Vec Tensor4::contract(const Vec& a, const Vec& b, const Vec& c) const { return contract(c).contract(a, b); }

Tensor4& Tensor4::operator+=(const Tensor4& o) {
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}
Tensor4& Tensor4::operator-=(const Tensor4& o) {
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}
Tensor4& Tensor4::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}
double Tensor4::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

Jet Jet::zeros(int dim, int order) {
  Jet j;
  j.order = order;
  j.grad = Vec::Zero(dim);
  if (order >= 2) j.hess = Mat::Zero(dim, dim);
  if (order >= 3) j.third = Tensor3(dim);
  if (order >= 4) j.fourth = Tensor4(dim);
  return j;
}

double Jet::partial(std::span<const int> idx) const {
  switch (idx.size()) {
    case 0:
      return value;
    case 1:
      return grad[idx[0]];
    case 2:
      return hess(idx[0], idx[1]);
    case 3:
      return third(idx[0], idx[1], idx[2]);
    case 4:
      return fourth(idx[0], idx[1], idx[2], idx[3]);
    default:
      throw std::invalid_argument("Jet::partial: order above 4");
  }
}

void Jet::set_partial(std::span<const int> idx, double v) {
  switch (idx.size()) {
    case 0:
      value = v;
      return;
    case 1:
      grad[idx[0]] = v;
      return;
    case 2:
      hess(idx[0], idx[1]) = v;
      return;
    case 3:
      third(idx[0], idx[1], idx[2]) = v;
      return;
    case 4:
      fourth(idx[0], idx[1], idx[2], idx[3]) = v;
      return;
    default:
      throw std::invalid_argument("Jet::set_partial: order above 4");
  }
}

void set_symmetric(Jet& jet, std::span<const int> sorted_idx, double v) {
  int p[4];
  const int k = static_cast<int>(sorted_idx.size());
  std::copy(sorted_idx.begin(), sorted_idx.end(), p);
  do {
    jet.set_partial(std::span<const int>(p, static_cast<std::size_t>(k)), v);
  } while (std::next_permutation(p, p + k));
}

namespace {

// Mixed partial of a product for one multi-index: sum over subsets S of the
// index positions of a_S * b_{complement}.
double leibniz(const Jet& a, const Jet& b, std::span<const int> idx) {
  const int k = static_cast<int>(idx.size());
  double s = 0.0;
  int left[4];
  int right[4];
  for (int mask = 0; mask < (1 << k); ++mask) {
    int nl = 0;
    int nr = 0;
    for (int t = 0; t < k; ++t) {
      if (mask & (1 << t))
        left[nl++] = idx[t];
      else
        right[nr++] = idx[t];
    }
    s += a.partial(std::span<const int>(left, static_cast<std::size_t>(nl))) *
         b.partial(std::span<const int>(right, static_cast<std::size_t>(nr)));
  }
  return s;
}

}  // namespace

Jet product(const Jet& a, const Jet& b) {
  const int order = std::min(a.order, b.order);
  const int d = a.dim();
  Jet out = Jet::zeros(d, order);
  out.value = a.value * b.value;
  for (int k = 1; k <= order; ++k)
    for_each_sorted_index(d, k, [&](std::span<const int> idx) { set_symmetric(out, idx, leibniz(a, b, idx)); });
  return out;
}

Jet sum(const Jet& a, const Jet& b) {
  const int order = std::min(a.order, b.order);
  Jet out = Jet::zeros(a.dim(), order);
  out.value = a.value + b.value;
  out.grad = a.grad + b.grad;
  if (order >= 2) out.hess = a.hess + b.hess;
  if (order >= 3) out.third = a.third + b.third;
  if (order >= 4) out.fourth = a.fourth + b.fourth;
  return out;
}

}  // namespace conjpt
