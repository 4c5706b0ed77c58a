#pragma once

// Dense symmetric-derivative containers: third- and fourth-order tensors and
// the Jet bundle (value plus derivatives up to order 4) that every smooth
// function in the library returns.

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace conjpt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline std::vector<double> to_std_vector(const Vec& v) { return {v.data(), v.data() + v.size()}; }

class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int dim) : dim_(dim), data_(static_cast<std::size_t>(dim) * dim * dim, 0.0) {}

  int dim() const noexcept { return dim_; }
  double& operator()(int i, int j, int k) { return data_[index(i, j, k)]; }
  double operator()(int i, int j, int k) const { return data_[index(i, j, k)]; }
  std::span<const double> data() const noexcept { return data_; }

  /// T(., ., a): contraction of the last slot.
  Mat contract(const Vec& a) const;
  /// T(., a, b).
  Vec contract(const Vec& a, const Vec& b) const;
  /// T(a, b, c).
  double contract(const Vec& a, const Vec& b, const Vec& c) const;

  Tensor3& operator+=(const Tensor3& o);
  Tensor3& operator-=(const Tensor3& o);
  Tensor3& operator*=(double s);
  double max_abs() const;

 private:
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * dim_ + j) * dim_ + k;
  }
  int dim_ = 0;
  std::vector<double> data_;
};

class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(int dim) : dim_(dim), data_(static_cast<std::size_t>(dim) * dim * dim * dim, 0.0) {}

  int dim() const noexcept { return dim_; }
  double& operator()(int i, int j, int k, int l) { return data_[index(i, j, k, l)]; }
  double operator()(int i, int j, int k, int l) const { return data_[index(i, j, k, l)]; }

  /// T(., ., ., a).
  Tensor3 contract(const Vec& a) const;
  /// T(., a, b, c).
  Vec contract(const Vec& a, const Vec& b, const Vec& c) const;

  Tensor4& operator+=(const Tensor4& o);
  Tensor4& operator-=(const Tensor4& o);
  Tensor4& operator*=(double s);
  double max_abs() const;

 private:
  std::size_t index(int i, int j, int k, int l) const {
    return ((static_cast<std::size_t>(i) * dim_ + j) * dim_ + k) * dim_ + l;
  }
  int dim_ = 0;
  std::vector<double> data_;
};

inline Tensor3 operator+(Tensor3 a, const Tensor3& b) { return a += b; }
inline Tensor3 operator-(Tensor3 a, const Tensor3& b) { return a -= b; }
inline Tensor3 operator*(double s, Tensor3 a) { return a *= s; }
inline Tensor4 operator+(Tensor4 a, const Tensor4& b) { return a += b; }
inline Tensor4 operator-(Tensor4 a, const Tensor4& b) { return a -= b; }
inline Tensor4 operator*(double s, Tensor4 a) { return a *= s; }

/// Value and derivatives of a scalar function at a point. Entries above
/// `order` are left empty.
struct Jet {
  int order = 0;
  double value = 0.0;
  Vec grad;
  Mat hess;
  Tensor3 third;
  Tensor4 fourth;

  static Jet zeros(int dim, int order);

  int dim() const noexcept { return static_cast<int>(grad.size()); }

  /// Mixed partial for a multi-index of length 0..4.
  double partial(std::span<const int> idx) const;
  void set_partial(std::span<const int> idx, double v);
};

/// Product rule (Leibniz) up to min(a.order, b.order).
Jet product(const Jet& a, const Jet& b);
/// Sum up to min(a.order, b.order).
Jet sum(const Jet& a, const Jet& b);

/// Visits every multi-index (i1 <= i2 <= ... <= ik) of length `order` over `dim`
/// coordinates in lexicographic order.
template <class F>
void for_each_sorted_index(int dim, int order, F&& f) {
  int idx[4] = {0, 0, 0, 0};
  auto rec = [&](auto&& self, int depth, int start) -> void {
    if (depth == order) {
      f(std::span<const int>(idx, static_cast<std::size_t>(order)));
      return;
    }
    for (int i = start; i < dim; ++i) {
      idx[depth] = i;
      self(self, depth + 1, i);
    }
  };
  rec(rec, 0, 0);
}

/// Fills every permutation of a sorted multi-index with the same value.
void set_symmetric(Jet& jet, std::span<const int> sorted_idx, double v);

}  // namespace conjpt
