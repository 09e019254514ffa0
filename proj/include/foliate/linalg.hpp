#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <vector>

#include "foliate/jet.hpp"

namespace Eigen {
template <typename T>
struct NumTraits<foliate::Dual<T>> : NumTraits<double> {
  using Real = foliate::Dual<T>;
  using NonInteger = foliate::Dual<T>;
  using Nested = foliate::Dual<T>;
  using Literal = foliate::Dual<T>;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 1,
    AddCost = 3,
    MulCost = 3
  };
};
}  // namespace Eigen

namespace foliate {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

template <typename S> using VecT = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <typename S> using MatT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

/// Metric inner product g(u, v) for any scalar type.
template <typename S, typename U, typename V>
S inner(const MatT<S>& g, const U& u, const V& v) {
  S acc(0.0);
  const auto d = g.rows();
  for (Eigen::Index i = 0; i < d; ++i) {
    S gi(0.0);
    for (Eigen::Index j = 0; j < d; ++j) gi += g(i, j) * v(j);
    acc += u(i) * gi;
  }
  return acc;
}

inline double inner(const Mat& g, const Vec& u, const Vec& v) { return u.dot(g * v); }

inline Mat symmetrize(const Mat& a) { return 0.5 * (a + a.transpose()); }

/// Eigenvalues of a symmetric matrix, ascending.
inline Vec sym_eigenvalues(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

/// 2-norm condition number of a symmetric positive semidefinite matrix.
inline double spd_condition(const Mat& a) {
  Vec ev = sym_eigenvalues(a);
  if (ev.size() == 0) return 1.0;
  double lo = ev(0), hi = ev(ev.size() - 1);
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

inline Vec value_of(const VecT<Dual<double>>& v) {
  Vec r(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) r(i) = v(i).v;
  return r;
}

inline Mat value_of(const MatT<Dual<double>>& m) {
  Mat r(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) r(i, j) = m(i, j).v;
  return r;
}

/// Partial derivative along coordinate k of a Dual-valued matrix.
inline Mat partial_of(const MatT<Dual<double>>& m, int k) {
  Mat r(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) r(i, j) = m(i, j).d[static_cast<std::size_t>(k)];
  return r;
}

/// Rank-4 array with dense row-major storage, used for R_{ijkl}.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(int d) : d_(d), data_(static_cast<std::size_t>(d * d * d * d), 0.0) {}
  int dim() const noexcept { return d_; }
  double& operator()(int i, int j, int k, int l) { return data_[index(i, j, k, l)]; }
  double operator()(int i, int j, int k, int l) const { return data_[index(i, j, k, l)]; }
  double max_abs() const {
    double m = 0.0;
    for (double x : data_) m = std::max(m, std::fabs(x));
    return m;
  }

 private:
  std::size_t index(int i, int j, int k, int l) const {
    return static_cast<std::size_t>(((i * d_ + j) * d_ + k) * d_ + l);
  }
  int d_ = 0;
  std::vector<double> data_;
};

}  // namespace foliate
