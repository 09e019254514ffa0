#pragma once

/// \file almost_product.hpp
/// Extrinsic geometry of an orthogonal pair (D⊤, D⊥).
///
/// Frame convention: columns 0..ν−1 of AdaptedPoint::E are {E_a} ⊂ D⊤,
/// columns ν..ν+n−1 are {ℰ_i} ⊂ D⊥.
///
///   h⊤(u,v) = ½(∇_u v + ∇_v u)⊥,   T⊤(u,v) = ½[u,v]⊥,   H⊤ = Σ_a h⊤(E_a,E_a),
///
/// and dually for D⊥. The co-nullity operator of D⊤ is B_x(y) = (∇_y x)⊥,
/// x ∈ D⊤, y ∈ D⊥, which makes Ḃ + B² + R⊥ = 0 along leaf geodesics.

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "foliate/errors.hpp"
#include "foliate/linalg.hpp"
#include "foliate/manifold.hpp"

namespace foliate {

/// Largest admissible condition number of the spanning Gram matrix.
inline constexpr double kMaxSpanCondition = 1e8;
/// Pivot norm below which a completion candidate is rejected.
inline constexpr double kPivotTolerance = 1e-10;
/// ‖h⊤‖ above which B is flagged (foliation not totally geodesic).
inline constexpr double kTotallyGeodesicTolerance = 1e-8;

struct DistributionSpec {
  std::vector<VectorFieldSpec> spanning;  ///< pointwise basis of D⊤

  int rank() const { return static_cast<int>(spanning.size()); }
};

class WeightedAlmostProduct {
 public:
  WeightedAlmostProduct() = default;

  WeightedAlmostProduct(ChartedManifold M, DistributionSpec dist, VectorFieldSpec X, double N,
                        double calN, std::string label = {})
      : M_(std::move(M)), dist_(std::move(dist)), X_(std::move(X)), N_(N), calN_(calN),
        label_(std::move(label)) {
    const int d = M_.dim();
    if (dist_.rank() < 1 || dist_.rank() >= d)
      throw InputError("distribution rank must lie in 1.." + std::to_string(d - 1));
    for (const auto& f : dist_.spanning)
      if (f.dim() != d) throw InputError("spanning field has wrong number of components");
    if (X_.dim() != d) throw InputError("weight field has wrong number of components");
    if (!(N_ != 0.0 && std::isfinite(N_)) || !(calN_ != 0.0 && std::isfinite(calN_)))
      throw InputError("synthetic dimensions N and calN must be finite and nonzero");
    if (label_.empty()) label_ = M_.label();
  }

  const ChartedManifold& manifold() const noexcept { return M_; }
  const DistributionSpec& distribution() const noexcept { return dist_; }
  const VectorFieldSpec& X() const noexcept { return X_; }
  double N() const noexcept { return N_; }
  double calN() const noexcept { return calN_; }
  int dim() const noexcept { return M_.dim(); }
  int nu() const noexcept { return dist_.rank(); }
  int n() const noexcept { return M_.dim() - dist_.rank(); }
  const std::string& label() const noexcept { return label_; }

  WeightedAlmostProduct with_X(VectorFieldSpec X) const {
    return WeightedAlmostProduct(M_, dist_, std::move(X), N_, calN_, label_);
  }
  WeightedAlmostProduct with_dimensions(double N, double calN) const {
    return WeightedAlmostProduct(M_, dist_, X_, N, calN, label_);
  }
  WeightedAlmostProduct with_distribution(DistributionSpec dist) const {
    return WeightedAlmostProduct(M_, std::move(dist), X_, N_, calN_, label_);
  }

 private:
  ChartedManifold M_;
  DistributionSpec dist_;
  VectorFieldSpec X_;
  double N_ = 1.0;
  double calN_ = 1.0;
  std::string label_;
};

namespace detail {

template <typename S>
void normalize_into(const MatT<S>& g, VecT<S>& v) {
  using std::sqrt;
  S len = sqrt(inner<S>(g, v, v));
  for (Eigen::Index k = 0; k < v.size(); ++k) v(k) /= len;
}

template <typename S>
void remove_component(const MatT<S>& g, VecT<S>& v, const VecT<S>& unit) {
  S c = inner<S>(g, v, unit);
  for (Eigen::Index k = 0; k < v.size(); ++k) v(k) -= c * unit(k);
}

/// Modified Gram–Schmidt with column pivoting. Picks `count` vectors from
/// `candidates` after projecting out `basis`; pivots on primal norms.
template <typename S>
void pivoted_mgs(const MatT<S>& g, std::vector<VecT<S>> candidates, int count,
                 std::vector<VecT<S>>& basis, const char* what) {
  for (auto& c : candidates)
    for (const auto& b : basis) remove_component<S>(g, c, b);
  std::vector<bool> used(candidates.size(), false);
  for (int step = 0; step < count; ++step) {
    int best = -1;
    double best_norm = -1.0;
    for (std::size_t r = 0; r < candidates.size(); ++r) {
      if (used[r]) continue;
      double nr = std::sqrt(std::max(0.0, primal(inner<S>(g, candidates[r], candidates[r]))));
      if (nr > best_norm) {
        best_norm = nr;
        best = static_cast<int>(r);
      }
    }
    if (best < 0 || best_norm < kPivotTolerance)
      throw NumericalError(std::string(what) + ": frame construction lost rank");
    used[static_cast<std::size_t>(best)] = true;
    VecT<S> e = candidates[static_cast<std::size_t>(best)];
    normalize_into<S>(g, e);
    for (std::size_t r = 0; r < candidates.size(); ++r)
      if (!used[r]) remove_component<S>(g, candidates[r], e);
    basis.push_back(std::move(e));
  }
}

}  // namespace detail

/// Adapted frame from spanning vectors of D⊤ at one point, over any scalar.
template <typename S>
MatT<S> build_adapted_frame(const MatT<S>& g, const std::vector<VecT<S>>& spanning,
                            double* condition = nullptr) {
  const int d = static_cast<int>(g.rows());
  const int nu = static_cast<int>(spanning.size());
  Mat gram(nu, nu);
  for (int a = 0; a < nu; ++a)
    for (int b = 0; b < nu; ++b) gram(a, b) = primal(inner<S>(g, spanning[a], spanning[b]));
  double cond = spd_condition(gram);
  if (condition) *condition = cond;
  if (!(cond <= kMaxSpanCondition))
    throw NumericalError("distribution is rank deficient (Gram condition " +
                         std::to_string(cond) + ")");

  std::vector<VecT<S>> basis;
  detail::pivoted_mgs<S>(g, spanning, nu, basis, "D-top");
  std::vector<VecT<S>> coords;
  for (int k = 0; k < d; ++k) {
    VecT<S> e(d);
    for (int i = 0; i < d; ++i) e(i) = S(i == k ? 1.0 : 0.0);
    coords.push_back(std::move(e));
  }
  detail::pivoted_mgs<S>(g, coords, d - nu, basis, "D-perp");
  MatT<S> E(d, d);
  for (int c = 0; c < d; ++c) E.col(c) = basis[static_cast<std::size_t>(c)];
  return E;
}

/// All first-order data at one point: geometry, adapted frame with exact
/// first derivatives, projectors, and the weight field.
struct AdaptedPoint {
  PointGeometry G;
  int d = 0, nu = 0, n = 0;
  Mat E;
  std::vector<Mat> dE;      ///< dE[c](k,i) = ∂_i E_c^k
  std::vector<Mat> nablaE;  ///< column i of nablaE[c] is ∇_{∂_i} E_c
  Mat Ptop, Pbot;           ///< orthogonal projectors on components
  double span_condition = 1.0;
  Vec Xv;                   ///< X(p)
  Mat nablaX;               ///< column i is ∇_{∂_i} X
  Mat lieX;                 ///< components of 𝓛_X g
  double divX = 0.0;

  const Mat& g() const { return G.g(); }
  double ip(const Vec& u, const Vec& v) const { return inner(G.g(), u, v); }
  double norm2(const Vec& u) const { return ip(u, u); }
  Vec e(int c) const { return E.col(c); }
  Vec top(int a) const { return E.col(a); }
  Vec bot(int i) const { return E.col(nu + i); }
  Mat top_basis() const { return E.leftCols(nu); }
  Mat bot_basis() const { return E.rightCols(n); }
  Vec perp(const Vec& v) const { return Pbot * v; }
  Vec tang(const Vec& v) const { return Ptop * v; }
  /// ∇_u E_c.
  Vec nabla_frame(int c, const Vec& u) const { return nablaE[static_cast<std::size_t>(c)] * u; }
  /// Coefficients of v in the frame.
  Vec frame_coords(const Vec& v) const { return E.transpose() * (G.g() * v); }
  /// L_X g(u, v).
  double lie(const Vec& u, const Vec& v) const { return u.dot(lieX * v); }
};

inline MatT<Dual<double>> dual_metric(const PointGeometry& G) {
  MatT<Dual<double>> g(G.d, G.d);
  for (int i = 0; i < G.d; ++i)
    for (int j = 0; j < G.d; ++j) {
      Dual<double> e(G.metric.g(i, j));
      for (int k = 0; k < G.d; ++k) e.d[static_cast<std::size_t>(k)] = G.metric.dg[k](i, j);
      g(i, j) = e;
    }
  return g;
}

/// Adapted frame as Dual numbers: values with exact first partials.
inline MatT<Dual<double>> dual_frame(const WeightedAlmostProduct& W, const PointGeometry& G,
                                     double* condition = nullptr) {
  std::vector<VecT<Dual<double>>> span;
  for (const auto& f : W.distribution().spanning) span.push_back(f.dual(G.p));
  return build_adapted_frame<Dual<double>>(dual_metric(G), span, condition);
}

inline AdaptedPoint adapt(const WeightedAlmostProduct& W, std::span<const double> p,
                          PointGeometry::Level level = PointGeometry::Level::Curvature) {
  if (level == PointGeometry::Level::Metric)
    throw InputError("adapted frame needs at least connection-level geometry");
  AdaptedPoint A;
  A.G = geometry_at(W.manifold(), p, level);
  A.d = W.dim();
  A.nu = W.nu();
  A.n = W.n();
  MatT<Dual<double>> Ed = dual_frame(W, A.G, &A.span_condition);
  A.E = value_of(Ed);
  A.dE.assign(A.d, Mat::Zero(A.d, A.d));
  A.nablaE.resize(A.d);
  for (int c = 0; c < A.d; ++c) {
    for (int k = 0; k < A.d; ++k)
      for (int i = 0; i < A.d; ++i) A.dE[c](k, i) = Ed(k, c).d[static_cast<std::size_t>(i)];
    A.nablaE[c] = A.G.covariant_jacobian(A.E.col(c), A.dE[c]);
  }
  Mat Et = A.E.leftCols(A.nu), Eb = A.E.rightCols(A.n);
  A.Ptop = Et * Et.transpose() * A.G.g();
  A.Pbot = Eb * Eb.transpose() * A.G.g();
  A.Xv = W.X().value(A.G.p);
  A.nablaX = nabla_field(A.G, W.X());
  Mat gn = A.G.g() * A.nablaX;
  A.lieX = gn + gn.transpose();
  A.divX = A.nablaX.trace();
  return A;
}

/// Second fundamental forms, integrability tensors and mean curvatures.
struct ExtrinsicPack {
  int nu = 0, n = 0;
  std::vector<std::vector<Vec>> htop, Ttop;  ///< [a][b], values in D⊥
  std::vector<std::vector<Vec>> hbot, Tbot;  ///< [i][j], values in D⊤
  Vec Htop, Hbot;
  double h_top2 = 0, h_bot2 = 0, T_top2 = 0, T_bot2 = 0, H_top2 = 0, H_bot2 = 0;
  double X_top2 = 0, X_bot2 = 0;
};

inline ExtrinsicPack extrinsic(const AdaptedPoint& A) {
  ExtrinsicPack P;
  P.nu = A.nu;
  P.n = A.n;
  auto fill = [&](int off, int r, const Mat& proj, std::vector<std::vector<Vec>>& h,
                  std::vector<std::vector<Vec>>& T, Vec& H, double& h2, double& T2, double& H2) {
    h.assign(r, std::vector<Vec>(r));
    T.assign(r, std::vector<Vec>(r));
    H = Vec::Zero(A.d);
    for (int a = 0; a < r; ++a)
      for (int b = 0; b < r; ++b) {
        Vec ab = A.nabla_frame(off + b, A.e(off + a));  // ∇_{E_a} E_b
        Vec ba = A.nabla_frame(off + a, A.e(off + b));
        h[a][b] = proj * (0.5 * (ab + ba));
        T[a][b] = proj * (0.5 * (ab - ba));
        h2 += A.norm2(h[a][b]);
        T2 += A.norm2(T[a][b]);
      }
    for (int a = 0; a < r; ++a) H += h[a][a];
    H2 = A.norm2(H);
  };
  fill(0, A.nu, A.Pbot, P.htop, P.Ttop, P.Htop, P.h_top2, P.T_top2, P.H_top2);
  fill(A.nu, A.n, A.Ptop, P.hbot, P.Tbot, P.Hbot, P.h_bot2, P.T_bot2, P.H_bot2);
  P.X_top2 = A.norm2(A.tang(A.Xv));
  P.X_bot2 = A.norm2(A.perp(A.Xv));
  return P;
}

/// Bilinear extension of a frame table: F(u, v) for u, v in the distribution
/// whose frame starts at column `off`.
inline Vec bilinear(const AdaptedPoint& A, const std::vector<std::vector<Vec>>& table, int off,
                    const Vec& u, const Vec& v) {
  Vec cu = A.frame_coords(u), cv = A.frame_coords(v);
  const int r = static_cast<int>(table.size());
  Vec out = Vec::Zero(A.d);
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b) out += cu(off + a) * cv(off + b) * table[a][b];
  return out;
}

inline Vec h_top(const AdaptedPoint& A, const ExtrinsicPack& P, const Vec& u, const Vec& v) {
  return bilinear(A, P.htop, 0, u, v);
}
inline Vec T_top(const AdaptedPoint& A, const ExtrinsicPack& P, const Vec& u, const Vec& v) {
  return bilinear(A, P.Ttop, 0, u, v);
}
inline Vec h_bot(const AdaptedPoint& A, const ExtrinsicPack& P, const Vec& u, const Vec& v) {
  return bilinear(A, P.hbot, A.nu, u, v);
}
inline Vec T_bot(const AdaptedPoint& A, const ExtrinsicPack& P, const Vec& u, const Vec& v) {
  return bilinear(A, P.Tbot, A.nu, u, v);
}

enum class Side { Top, Bot };

inline void require_in(const AdaptedPoint& A, const Vec& v, Side side, const char* what) {
  Vec off = side == Side::Top ? A.perp(v) : A.tang(v);
  double scale = std::max(1.0, std::sqrt(A.norm2(v)));
  if (std::sqrt(A.norm2(off)) > 1e-8 * scale)
    throw InputError(std::string(what) + (side == Side::Top ? " is not in D-top" : " is not in D-perp"));
}

/// Weingarten operator A_Z of the given side, as a matrix in that side's frame
/// (column a is the image of the a-th frame vector). Z must lie in the other side.
inline Mat weingarten(const AdaptedPoint& A, const ExtrinsicPack& P, Side side, const Vec& Z) {
  require_in(A, Z, side == Side::Top ? Side::Bot : Side::Top, "Z");
  const auto& h = side == Side::Top ? P.htop : P.hbot;
  const int r = static_cast<int>(h.size());
  Mat M(r, r);
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b) M(b, a) = A.ip(h[a][b], Z);
  return M;
}

/// T♯_w with g(T♯_w u, v) = g(T(u, v), w), same layout as weingarten().
inline Mat T_sharp(const AdaptedPoint& A, const ExtrinsicPack& P, Side side, const Vec& w) {
  require_in(A, w, side == Side::Top ? Side::Bot : Side::Top, "w");
  const auto& T = side == Side::Top ? P.Ttop : P.Tbot;
  const int r = static_cast<int>(T.size());
  Mat M(r, r);
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b) M(b, a) = A.ip(T[a][b], w);
  return M;
}

struct CoNullity {
  Mat B;         ///< n×n in the ℰ frame: B(j,i) = g(B_x ℰ_i, ℰ_j)
  Mat BX;        ///< weighted: B − g(X/n, x) id
  bool totally_geodesic = true;
  double h_top_norm = 0.0;
};

inline CoNullity co_nullity(const AdaptedPoint& A, const ExtrinsicPack& P, const Vec& x) {
  require_in(A, x, Side::Top, "x");
  CoNullity C;
  Vec c = A.frame_coords(x);
  C.B = Mat::Zero(A.n, A.n);
  for (int i = 0; i < A.n; ++i) {
    Vec col = Vec::Zero(A.d);
    for (int a = 0; a < A.nu; ++a) col += c(a) * A.nabla_frame(a, A.bot(i));
    for (int j = 0; j < A.n; ++j) C.B(j, i) = A.ip(col, A.bot(j));
  }
  double s = A.ip(A.Xv, x) / A.n;
  C.BX = C.B - s * Mat::Identity(A.n, A.n);
  C.h_top_norm = std::sqrt(P.h_top2);
  C.totally_geodesic = C.h_top_norm < kTotallyGeodesicTolerance;
  return C;
}

/// Fourth-order central-difference Jacobian of a vector field given as a
/// function of the point: J(k, i) = ∂_i f^k.
inline Mat field_jacobian_fd(const ChartedManifold& M,
                             const std::function<Vec(std::span<const double>)>& f,
                             std::span<const double> p, double h = 1e-3) {
  const int d = M.dim();
  std::vector<double> q(p.begin(), p.end());
  Mat J(d, d);
  for (int i = 0; i < d; ++i) {
    auto at = [&](double s) {
      std::vector<double> r = q;
      r[static_cast<std::size_t>(i)] += s;
      return f(M.reduce(r));
    };
    J.col(i) = (-at(2 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2 * h)) / (12.0 * h);
  }
  return J;
}

}  // namespace foliate
