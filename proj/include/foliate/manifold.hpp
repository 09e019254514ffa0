#pragma once

/// \file manifold.hpp
/// Chart-level Riemannian calculus.
///
/// Conventions, used everywhere in the library:
///
///   R(u,v)w = ∇_u∇_v w − ∇_v∇_u w − ∇_[u,v] w,
///   R(u,v,w,z) = g(R(u,v)w, z),
///   K(u,v) = R(u,v,v,u) / (|u|²|v|² − g(u,v)²),
///
/// so that the round unit sphere has K = +1.

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "foliate/errors.hpp"
#include "foliate/expr.hpp"
#include "foliate/jet.hpp"
#include "foliate/linalg.hpp"

namespace foliate {

/// Gram determinant below which a plane is treated as degenerate.
inline constexpr double kDegenerateGram = 1e-14;

struct Coordinate {
  std::optional<double> period;  ///< periodic coordinate with this period
  double lo = -std::numeric_limits<double>::infinity();  ///< open domain (non-periodic)
  double hi = std::numeric_limits<double>::infinity();
  double margin = 0.0;  ///< sampling exclusion zone at lo/hi

  static Coordinate periodic(double p) {
    Coordinate c;
    c.period = p;
    return c;
  }
  static Coordinate interval(double lo, double hi, double margin = 0.0) {
    Coordinate c;
    c.lo = lo;
    c.hi = hi;
    c.margin = margin;
    return c;
  }
};

/// Vector field given by one expression per coordinate component.
struct VectorFieldSpec {
  std::vector<Expr> components;
  std::string label;

  int dim() const { return static_cast<int>(components.size()); }

  static VectorFieldSpec from_strings(const std::vector<std::string>& comps, int dim,
                                      std::string label = {}) {
    if (static_cast<int>(comps.size()) != dim)
      throw InputError("vector field '" + label + "' needs " + std::to_string(dim) +
                       " components, got " + std::to_string(comps.size()));
    VectorFieldSpec v;
    v.label = std::move(label);
    for (const auto& c : comps) v.components.push_back(parse(c, dim));
    return v;
  }

  static VectorFieldSpec zero(int dim, std::string label = "0") {
    VectorFieldSpec v;
    v.label = std::move(label);
    for (int i = 0; i < dim; ++i) v.components.push_back(Expr::constant(0.0, dim));
    return v;
  }

  bool is_zero() const {
    for (const auto& c : components)
      if (!(c.root()->op == Op::Number && c.root()->value == 0.0)) return false;
    return true;
  }

  Vec value(std::span<const double> p) const {
    Vec r(dim());
    for (int i = 0; i < dim(); ++i) r(i) = components[i].eval_value(p);
    return r;
  }

  /// Components with their first partial derivatives.
  VecT<Dual<double>> dual(std::span<const double> p) const {
    std::array<Dual<double>, kMaxDim> xs;
    const int d = dim();
    for (int i = 0; i < d; ++i) xs[i] = Dual<double>::variable(p[i], i);
    std::span<const Dual<double>> sp(xs.data(), static_cast<std::size_t>(d));
    VecT<Dual<double>> r(d);
    for (int i = 0; i < d; ++i) r(i) = components[i].eval<Dual<double>>(sp);
    return r;
  }
};

/// A single coordinate chart with a metric given by expressions.
class ChartedManifold {
 public:
  ChartedManifold() = default;

  /// `metric` is the full d×d matrix of expression strings; symmetry is
  /// checked by evaluation at sample points.
  ChartedManifold(std::string label, std::vector<Coordinate> coords,
                  const std::vector<std::vector<std::string>>& metric)
      : label_(std::move(label)), coords_(std::move(coords)) {
    dim_ = static_cast<int>(coords_.size());
    if (dim_ <= 0) throw InputError("chart needs at least one coordinate");
    if (dim_ > kMaxDim)
      throw InputError("chart dimension " + std::to_string(dim_) + " exceeds " +
                       std::to_string(kMaxDim));
    if (static_cast<int>(metric.size()) != dim_)
      throw InputError("metric must have " + std::to_string(dim_) + " rows");
    std::vector<std::vector<Expr>> full(dim_);
    for (int i = 0; i < dim_; ++i) {
      if (static_cast<int>(metric[i].size()) != dim_)
        throw InputError("metric row " + std::to_string(i) + " must have " +
                         std::to_string(dim_) + " entries");
      for (int j = 0; j < dim_; ++j) full[i].push_back(parse(metric[i][j], dim_));
    }
    for (int i = 0; i < dim_; ++i)
      for (int j = i; j < dim_; ++j) upper_.push_back(full[i][j]);

    std::mt19937_64 rng(12345);
    for (int s = 0; s < 16; ++s) {
      auto p = sample_point(rng);
      for (int i = 0; i < dim_; ++i)
        for (int j = i + 1; j < dim_; ++j) {
          double a = full[i][j].eval_value(p), b = full[j][i].eval_value(p);
          if (std::fabs(a - b) > 1e-12 * (1.0 + std::fabs(a)))
            throw InputError("metric is not symmetric in entries (" + std::to_string(i) + "," +
                             std::to_string(j) + ")");
        }
    }
  }

  const std::string& label() const noexcept { return label_; }
  int dim() const noexcept { return dim_; }
  const std::vector<Coordinate>& coordinates() const noexcept { return coords_; }
  const Expr& metric_entry(int i, int j) const {
    if (i > j) std::swap(i, j);
    return upper_[static_cast<std::size_t>(i * dim_ - i * (i - 1) / 2 + (j - i))];
  }

  bool closed() const {
    for (const auto& c : coords_)
      if (!c.period) return false;
    return true;
  }

  /// Reduces periodic coordinates and rejects points outside the chart box.
  std::vector<double> reduce(std::span<const double> p) const {
    if (static_cast<int>(p.size()) != dim_)
      throw InputError("point has " + std::to_string(p.size()) + " coordinates, chart has " +
                       std::to_string(dim_));
    std::vector<double> q(p.begin(), p.end());
    for (int i = 0; i < dim_; ++i) {
      const auto& c = coords_[i];
      if (!std::isfinite(q[i])) throw NumericalError("non-finite coordinate");
      if (c.period) {
        q[i] = std::fmod(q[i], *c.period);
        if (q[i] < 0.0) q[i] += *c.period;
      } else if (!(q[i] > c.lo && q[i] < c.hi)) {
        throw NumericalError("point outside chart domain: x" + std::to_string(i) + " = " +
                             std::to_string(q[i]));
      }
    }
    return q;
  }

  template <typename Rng>
  std::vector<double> sample_point(Rng& rng) const {
    std::vector<double> p(static_cast<std::size_t>(dim_));
    for (int i = 0; i < dim_; ++i) {
      const auto& c = coords_[i];
      double lo, hi;
      if (c.period) {
        lo = 0.0;
        hi = *c.period;
      } else {
        lo = std::isfinite(c.lo) ? c.lo + c.margin : -1.0;
        hi = std::isfinite(c.hi) ? c.hi - c.margin : 1.0;
      }
      p[i] = std::uniform_real_distribution<double>(lo, hi)(rng);
    }
    return p;
  }

 private:
  std::string label_;
  int dim_ = 0;
  std::vector<Coordinate> coords_;
  std::vector<Expr> upper_;
};

/// g(p) with first and second partial derivatives.
struct MetricJet {
  Mat g;
  std::vector<Mat> dg;   ///< dg[k](i,j) = ∂_k g_ij
  std::vector<Mat> ddg;  ///< ddg[k*d+l](i,j) = ∂_k∂_l g_ij
};

/// Everything the curvature code needs at one point.
struct PointGeometry {
  enum class Level { Metric, Connection, Curvature };

  std::vector<double> p;
  int d = 0;
  MetricJet metric;
  Mat ginv;
  double sqrt_det = 0.0;
  std::vector<Mat> gamma;   ///< gamma[k](i,j) = Γ^k_ij
  std::vector<Mat> dgamma;  ///< dgamma[m*d+k](i,j) = ∂_m Γ^k_ij
  Tensor4 riem;             ///< riem(i,j,k,l) = R(∂_i,∂_j,∂_k,∂_l)

  const Mat& g() const { return metric.g; }

  /// Γ(u,v)^k = Γ^k_ij u^i v^j.
  Vec gamma_contract(const Vec& u, const Vec& v) const {
    Vec r(d);
    for (int k = 0; k < d; ++k) r(k) = u.dot(gamma[k] * v);
    return r;
  }

  /// ∇_u V for a field with value V and Jacobian dV(k,i) = ∂_i V^k.
  Vec covariant(const Vec& u, const Vec& V, const Mat& dV) const {
    return dV * u + gamma_contract(u, V);
  }

  /// Matrix of ∇V: column i is ∇_{∂_i}V.
  Mat covariant_jacobian(const Vec& V, const Mat& dV) const {
    Mat r = dV;
    for (int k = 0; k < d; ++k) r.row(k) += (gamma[k] * V).transpose();
    return r;
  }

  double R(const Vec& u, const Vec& v, const Vec& w, const Vec& z) const {
    double acc = 0.0;
    for (int i = 0; i < d; ++i) {
      if (u(i) == 0.0) continue;
      for (int j = 0; j < d; ++j) {
        if (v(j) == 0.0) continue;
        double uv = u(i) * v(j);
        for (int k = 0; k < d; ++k) {
          if (w(k) == 0.0) continue;
          double s = 0.0;
          for (int l = 0; l < d; ++l) s += riem(i, j, k, l) * z(l);
          acc += uv * w(k) * s;
        }
      }
    }
    return acc;
  }

  /// Matrix of w ↦ R(w, v)v as bilinear form: M(a,b) = R(e_a, v, v, e_b).
  Mat jacobi_form(const Vec& v) const {
    Mat m = Mat::Zero(d, d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) {
        double s = 0.0;
        for (int j = 0; j < d; ++j)
          for (int k = 0; k < d; ++k) s += riem(a, j, k, b) * v(j) * v(k);
        m(a, b) = s;
      }
    return m;
  }
};

inline MetricJet metric_jet(const ChartedManifold& M, std::span<const double> p) {
  const int d = M.dim();
  MetricJet mj;
  mj.g = Mat::Zero(d, d);
  mj.dg.assign(d, Mat::Zero(d, d));
  mj.ddg.assign(static_cast<std::size_t>(d * d), Mat::Zero(d, d));
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      Jet2 e = M.metric_entry(i, j).eval_jet(p);
      mj.g(i, j) = mj.g(j, i) = e.v;
      for (int k = 0; k < d; ++k) {
        mj.dg[k](i, j) = mj.dg[k](j, i) = e.grad(k);
        for (int l = 0; l < d; ++l)
          mj.ddg[static_cast<std::size_t>(k * d + l)](i, j) =
              mj.ddg[static_cast<std::size_t>(k * d + l)](j, i) = e.hess(k, l);
      }
    }
  return mj;
}

/// Computes the point data up to the requested level.
inline PointGeometry geometry_at(const ChartedManifold& M, std::span<const double> p_in,
                                 PointGeometry::Level level = PointGeometry::Level::Curvature) {
  PointGeometry G;
  G.p = M.reduce(p_in);
  const int d = G.d = M.dim();
  G.metric = metric_jet(M, G.p);
  Eigen::LLT<Mat> llt(G.metric.g);
  if (llt.info() != Eigen::Success || llt.matrixL().toDenseMatrix().diagonal().minCoeff() <= 0.0)
    throw NumericalError("metric not positive definite at point");
  G.ginv = llt.solve(Mat::Identity(d, d));
  G.sqrt_det = llt.matrixL().toDenseMatrix().diagonal().prod();
  if (level == PointGeometry::Level::Metric) return G;

  // Γ_{l,ij} = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
  const auto& dg = G.metric.dg;
  std::vector<Mat> first(d, Mat::Zero(d, d));  // first[l](i,j)
  for (int l = 0; l < d; ++l)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        first[l](i, j) = 0.5 * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
  G.gamma.assign(d, Mat::Zero(d, d));
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l)
      if (G.ginv(k, l) != 0.0) G.gamma[k] += G.ginv(k, l) * first[l];
  if (level == PointGeometry::Level::Connection) return G;

  // ∂_m Γ^k_ij = ∂_m g^{kl} Γ_{l,ij} + g^{kl} ∂_m Γ_{l,ij}
  const auto& ddg = G.metric.ddg;
  auto dd = [&](int a, int b) -> const Mat& { return ddg[static_cast<std::size_t>(a * d + b)]; };
  G.dgamma.assign(static_cast<std::size_t>(d * d), Mat::Zero(d, d));
  for (int m = 0; m < d; ++m) {
    Mat dginv = -G.ginv * dg[m] * G.ginv;
    std::vector<Mat> dfirst(d, Mat::Zero(d, d));
    for (int l = 0; l < d; ++l)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          dfirst[l](i, j) = 0.5 * (dd(m, i)(j, l) + dd(m, j)(i, l) - dd(m, l)(i, j));
    for (int k = 0; k < d; ++k) {
      Mat& out = G.dgamma[static_cast<std::size_t>(m * d + k)];
      for (int l = 0; l < d; ++l) out += dginv(k, l) * first[l] + G.ginv(k, l) * dfirst[l];
    }
  }
  // R^m_{ijk} = ∂_iΓ^m_jk − ∂_jΓ^m_ik + Γ^m_ia Γ^a_jk − Γ^m_ja Γ^a_ik
  auto dG = [&](int m, int k, int i, int j) {
    return G.dgamma[static_cast<std::size_t>(m * d + k)](i, j);
  };
  Tensor4 up(d);  // up(i,j,k,m) = R^m_{ijk}
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      for (int k = 0; k < d; ++k)
        for (int m = 0; m < d; ++m) {
          double s = dG(i, m, j, k) - dG(j, m, i, k);
          for (int a = 0; a < d; ++a)
            s += G.gamma[m](i, a) * G.gamma[a](j, k) - G.gamma[m](j, a) * G.gamma[a](i, k);
          up(i, j, k, m) = s;
        }
    }
  G.riem = Tensor4(d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          double s = 0.0;
          for (int m = 0; m < d; ++m) s += G.metric.g(l, m) * up(i, j, k, m);
          G.riem(i, j, k, l) = s;
        }
  return G;
}

inline MetricJet metric_at(const ChartedManifold& M, std::span<const double> p) {
  return geometry_at(M, p, PointGeometry::Level::Metric).metric;
}

inline std::vector<Mat> christoffel(const ChartedManifold& M, std::span<const double> p) {
  return geometry_at(M, p, PointGeometry::Level::Connection).gamma;
}

inline Tensor4 riemann(const ChartedManifold& M, std::span<const double> p) {
  return geometry_at(M, p).riem;
}

inline double sectional(const PointGeometry& G, const Vec& u, const Vec& v) {
  const Mat& g = G.g();
  double uu = inner(g, u, u), vv = inner(g, v, v), uv = inner(g, u, v);
  double gram = uu * vv - uv * uv;
  if (gram < kDegenerateGram) throw NumericalError("degenerate plane in sectional curvature");
  return G.R(u, v, v, u) / gram;
}

inline double sectional(const ChartedManifold& M, std::span<const double> p, const Vec& u,
                        const Vec& v) {
  return sectional(geometry_at(M, p), u, v);
}

/// Covariant Jacobian of a vector field: column i is ∇_{∂_i} X.
inline Mat nabla_field(const PointGeometry& G, const VectorFieldSpec& X) {
  auto xd = X.dual(G.p);
  Vec val = value_of(xd);
  Mat jac(G.d, G.d);
  for (int k = 0; k < G.d; ++k)
    for (int i = 0; i < G.d; ++i) jac(k, i) = xd(k).d[static_cast<std::size_t>(i)];
  return G.covariant_jacobian(val, jac);
}

/// Component matrix of 𝓛_X g: L(i,j) = g(∇_i X, ∂_j) + g(∂_i, ∇_j X).
inline Mat lie_derivative_metric(const PointGeometry& G, const VectorFieldSpec& X) {
  Mat gn = G.g() * nabla_field(G, X);  // gn(l,i) = g(∂_l, ∇_i X)
  return gn + gn.transpose();
}

inline Mat lie_derivative_metric(const ChartedManifold& M, const VectorFieldSpec& X,
                                 std::span<const double> p) {
  return lie_derivative_metric(geometry_at(M, p, PointGeometry::Level::Connection), X);
}

inline double divergence(const PointGeometry& G, const VectorFieldSpec& X) {
  return nabla_field(G, X).trace();
}

inline double divergence(const ChartedManifold& M, const VectorFieldSpec& X,
                         std::span<const double> p) {
  return divergence(geometry_at(M, p, PointGeometry::Level::Connection), X);
}

/// g-orthonormality residual of a frame: max |basisᵀ g basis − I|.
inline double orthonormality_residual(const Mat& g, const Mat& basis) {
  return (basis.transpose() * g * basis - Mat::Identity(basis.cols(), basis.cols()))
      .cwiseAbs()
      .maxCoeff();
}

struct PointFrame {
  std::vector<double> point;
  Mat basis;  ///< columns are the frame vectors
};

}  // namespace foliate
