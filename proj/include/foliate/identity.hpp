#pragma once

/// \file identity.hpp
/// Pointwise divergence identities, integral formulas and splitting
/// integrands, each checked by two independent evaluation paths: divergences
/// by differentiating frame-computed fields, algebraic sides from jets.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "foliate/almost_product.hpp"
#include "foliate/errors.hpp"
#include "foliate/weighted.hpp"

namespace foliate {

inline constexpr double kHypothesisTolerance = 1e-8;
inline constexpr double kDefaultIdentityTolerance = 1e-6;
inline constexpr int kDefaultQuadratureNodes = 48;
inline constexpr int kMaxQuadratureNodes = 128;

struct ResidualReport {
  std::string id;
  int samples = 0;
  double max = 0.0;
  double mean = 0.0;
  std::vector<double> worst_point;
  double tolerance = kDefaultIdentityTolerance;
  bool pass = true;
  std::vector<std::vector<double>> points;  ///< per-point data for CSV export
  std::vector<double> residuals;
};

// ---------------------------------------------------------------------------
// parallel evaluation and reproducible summation

/// Pairwise (tree) summation; the result does not depend on thread count.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum(v.first(h)) + pairwise_sum(v.subspan(h));
}

/// out[i] = f(i) for i < count, spread over hardware threads. The first
/// exception thrown by any worker is rethrown.
inline std::vector<double> parallel_map(std::size_t count, const std::function<double(std::size_t)>& f) {
  std::vector<double> out(count, 0.0);
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), count / 16 + 1));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  auto run = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        out[i] = f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!error) error = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

// ---------------------------------------------------------------------------
// frame-computed fields and their divergences

/// Mean curvature vectors (H⊤, H⊥) from the frame at p.
inline std::pair<Vec, Vec> mean_curvatures(const WeightedAlmostProduct& W, std::span<const double> p) {
  AdaptedPoint A = adapt(W, p, PointGeometry::Level::Connection);
  ExtrinsicPack P = extrinsic(A);
  return {P.Htop, P.Hbot};
}

/// ∇Z at A for a field given as a function of the point; the Jacobian is a
/// fourth-order central difference.
inline Mat nabla_fd(const WeightedAlmostProduct& W, const AdaptedPoint& A,
                    const std::function<Vec(std::span<const double>)>& Z) {
  Mat J = field_jacobian_fd(W.manifold(), Z, A.G.p);
  return A.G.covariant_jacobian(Z(A.G.p), J);
}

/// Div Z, Div⊤ Z = Σ_a g(∇_{E_a} Z, E_a) and Div⊥ Z from ∇Z.
struct Divergences {
  double full = 0.0, top = 0.0, bot = 0.0;
};

inline Divergences divergences(const AdaptedPoint& A, const Mat& nablaZ) {
  return {nablaZ.trace(), (A.Ptop * nablaZ).trace(), (A.Pbot * nablaZ).trace()};
}

inline Vec tangential_field(const WeightedAlmostProduct& W, const VectorFieldSpec& xi,
                            std::span<const double> p, Side side) {
  AdaptedPoint A = adapt(W, p, PointGeometry::Level::Connection);
  Vec v = xi.value(A.G.p);
  return side == Side::Top ? A.tang(v) : A.perp(v);
}

struct DivDDResidual {
  double top = 0.0;  ///< Div⊤(ξ⊤) − (Div ξ⊤ + g(ξ, H⊥))
  double bot = 0.0;  ///< Div⊥(ξ⊥) − (Div ξ⊥ + g(ξ, H⊤))
};

inline DivDDResidual check_div_dd(const WeightedAlmostProduct& W, const VectorFieldSpec& xi,
                                  std::span<const double> p) {
  if (xi.dim() != W.dim()) throw InputError("vector field dimension does not match the chart");
  AdaptedPoint A = adapt(W, p);
  ExtrinsicPack P = extrinsic(A);
  Vec x = xi.value(A.G.p);
  Divergences t = divergences(
      A, nabla_fd(W, A, [&](std::span<const double> q) { return tangential_field(W, xi, q, Side::Top); }));
  Divergences b = divergences(
      A, nabla_fd(W, A, [&](std::span<const double> q) { return tangential_field(W, xi, q, Side::Bot); }));
  return {t.top - (t.full + A.ip(x, P.Hbot)), b.bot - (b.full + A.ip(x, P.Htop))};
}

/// Divergences of H⊤ and H⊥, both computed numerically.
struct MeanCurvatureDivergences {
  Divergences top, bot;
};

inline MeanCurvatureDivergences mean_curvature_divergences(const WeightedAlmostProduct& W,
                                                           const AdaptedPoint& A) {
  auto Ht = [&](std::span<const double> q) { return mean_curvatures(W, q).first; };
  auto Hb = [&](std::span<const double> q) { return mean_curvatures(W, q).second; };
  return {divergences(A, nabla_fd(W, A, Ht)), divergences(A, nabla_fd(W, A, Hb))};
}

/// S_mix − ‖T⊤‖² − ‖T⊥‖² + ‖h⊤‖² + ‖h⊥‖² − ‖H⊤‖² − ‖H⊥‖².
inline double pw_identity_rhs(const ExtrinsicPack& P, double S_mix) {
  return S_mix - P.T_top2 - P.T_bot2 + P.h_top2 + P.h_bot2 - P.H_top2 - P.H_bot2;
}

/// Div(H⊤ + H⊥) minus the algebraic side.
inline double check_pw_identity(const WeightedAlmostProduct& W, std::span<const double> p) {
  AdaptedPoint A = adapt(W, p);
  ExtrinsicPack P = extrinsic(A);
  MeanCurvatureDivergences D = mean_curvature_divergences(W, A);
  return D.top.full + D.bot.full - pw_identity_rhs(P, mixed_scalar(W, A).S_mix);
}

/// Div⊤(H⊥) + Div⊥(H⊤) minus S_mix + ‖h⊥‖² + ‖h⊤‖² − ‖T⊥‖² − ‖T⊤‖².
inline double check_div_if2(const WeightedAlmostProduct& W, std::span<const double> p) {
  AdaptedPoint A = adapt(W, p);
  ExtrinsicPack P = extrinsic(A);
  MeanCurvatureDivergences D = mean_curvature_divergences(W, A);
  double rhs = mixed_scalar(W, A).S_mix + P.h_bot2 + P.h_top2 - P.T_bot2 - P.T_top2;
  return D.bot.top + D.top.bot - rhs;
}

/// All pointwise residuals at p sharing one set of difference stencils.
struct PointwiseResiduals {
  double pw_if = 0.0, div_if2 = 0.0, dd_top = 0.0, dd_bot = 0.0;
  double max() const {
    return std::max({std::fabs(pw_if), std::fabs(div_if2), std::fabs(dd_top), std::fabs(dd_bot)});
  }
};

inline PointwiseResiduals pointwise_residuals(const WeightedAlmostProduct& W, const VectorFieldSpec& xi,
                                              std::span<const double> p) {
  AdaptedPoint A = adapt(W, p);
  ExtrinsicPack P = extrinsic(A);
  MeanCurvatureDivergences D = mean_curvature_divergences(W, A);
  const double S_mix = mixed_scalar(W, A).S_mix;
  PointwiseResiduals r;
  r.pw_if = D.top.full + D.bot.full - pw_identity_rhs(P, S_mix);
  r.div_if2 = D.bot.top + D.top.bot - (S_mix + P.h_bot2 + P.h_top2 - P.T_bot2 - P.T_top2);
  DivDDResidual dd = check_div_dd(W, xi, p);
  r.dd_top = dd.top;
  r.dd_bot = dd.bot;
  return r;
}

/// Random smooth field: each component a short trigonometric polynomial in
/// all coordinates with coefficients of size ≤ amplitude.
template <typename Rng>
VectorFieldSpec random_trig_field(int d, Rng& rng, int terms = 3, double amplitude = 0.5) {
  std::uniform_real_distribution<double> coef(-amplitude, amplitude);
  std::uniform_int_distribution<int> freq(-2, 2);
  std::vector<std::string> comps;
  for (int k = 0; k < d; ++k) {
    std::string c = detail::format_number(coef(rng));
    for (int t = 0; t < terms; ++t) {
      std::string arg;
      for (int i = 0; i < d; ++i) {
        int f = freq(rng);
        if (f == 0) continue;
        arg += (f < 0 ? "-" : (arg.empty() ? "" : "+")) + std::to_string(std::abs(f)) + "*x" +
               std::to_string(i);
      }
      if (arg.empty()) arg = "0";
      c += " + " + detail::format_number(coef(rng)) + (t % 2 ? "*cos(" : "*sin(") + arg + ")";
    }
    comps.push_back(c);
  }
  return VectorFieldSpec::from_strings(comps, d, "random");
}

/// Max and mean of |r(p)| over the points.
inline ResidualReport residual_report(std::string id, const std::vector<std::vector<double>>& points,
                                      double tolerance,
                                      const std::function<double(std::span<const double>)>& r) {
  ResidualReport rep;
  rep.id = std::move(id);
  rep.tolerance = tolerance;
  rep.samples = static_cast<int>(points.size());
  rep.points = points;
  rep.residuals = parallel_map(points.size(), [&](std::size_t i) { return std::fabs(r(points[i])); });
  for (std::size_t i = 0; i < points.size(); ++i)
    if (i == 0 || rep.residuals[i] > rep.max) {
      rep.max = rep.residuals[i];
      rep.worst_point = points[i];
    }
  rep.mean = points.empty() ? 0.0 : pairwise_sum(rep.residuals) / static_cast<double>(points.size());
  rep.pass = rep.max <= tolerance;
  return rep;
}

/// The four pointwise identities over the given points, ξ for the
/// distribution-divergence pair.
inline std::vector<ResidualReport> pointwise_suite(const WeightedAlmostProduct& W, const VectorFieldSpec& xi,
                                                   const std::vector<std::vector<double>>& points,
                                                   double tolerance = kDefaultIdentityTolerance) {
  std::vector<PointwiseResiduals> all(points.size());
  parallel_map(points.size(), [&](std::size_t i) {
    all[i] = pointwise_residuals(W, xi, points[i]);
    return 0.0;
  });
  std::vector<ResidualReport> out;
  auto lookup = [&](const char* id, double PointwiseResiduals::*field) {
    ResidualReport rep;
    rep.id = id;
    rep.tolerance = tolerance;
    rep.samples = static_cast<int>(points.size());
    rep.points = points;
    rep.residuals.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      rep.residuals[i] = std::fabs(all[i].*field);
      if (i == 0 || rep.residuals[i] > rep.max) {
        rep.max = rep.residuals[i];
        rep.worst_point = points[i];
      }
    }
    rep.mean = points.empty() ? 0.0 : pairwise_sum(rep.residuals) / static_cast<double>(points.size());
    rep.pass = rep.max <= tolerance;
    out.push_back(std::move(rep));
  };
  lookup("pointwise-integral-identity", &PointwiseResiduals::pw_if);
  lookup("distribution-divergence-top", &PointwiseResiduals::dd_top);
  lookup("distribution-divergence-bot", &PointwiseResiduals::dd_bot);
  lookup("leafwise-divergence-identity", &PointwiseResiduals::div_if2);
  return out;
}

// ---------------------------------------------------------------------------
// quadrature

/// Gauss–Legendre nodes and weights on [−1, 1] (Golub–Welsch).
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int m) {
  if (m < 1) throw InputError("Gauss-Legendre needs at least one node");
  Mat J = Mat::Zero(m, m);
  for (int k = 1; k < m; ++k) {
    double b = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = J(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(J);
  std::vector<double> x(m), w(m);
  for (int k = 0; k < m; ++k) {
    x[k] = es.eigenvalues()(k);
    double v = es.eigenvectors()(0, k);
    w[k] = 2.0 * v * v;
  }
  return {x, w};
}

struct QuadratureOptions {
  int nodes = kDefaultQuadratureNodes;  ///< per coordinate
  /// Accept finite intervals: the chart covers a closed manifold up to a
  /// null set and the volume element vanishes at the interval ends.
  bool collapsing_ends = false;
};

struct Axis {
  std::vector<double> x, w;
};

inline Axis quadrature_axis(const Coordinate& c, int nodes, bool collapsing_ends) {
  Axis a;
  if (c.period) {
    const double h = *c.period / nodes;
    for (int k = 0; k < nodes; ++k) {
      a.x.push_back(k * h);
      a.w.push_back(h);
    }
    return a;
  }
  if (!collapsing_ends || !std::isfinite(c.lo) || !std::isfinite(c.hi))
    throw InputError("quadrature needs a closed chart: every coordinate periodic");
  auto [x, w] = gauss_legendre(nodes);
  const double mid = 0.5 * (c.lo + c.hi), half = 0.5 * (c.hi - c.lo);
  for (int k = 0; k < nodes; ++k) {
    a.x.push_back(mid + half * x[k]);
    a.w.push_back(half * w[k]);
  }
  return a;
}

namespace detail {

/// (Σ f vol w, Σ |f| vol w) over the tensor-product rule.
inline std::pair<double, double> quadrature_sums(const ChartedManifold& M,
                                                 const std::function<double(std::span<const double>)>& f,
                                                 const std::vector<int>& axes, std::span<const double> base,
                                                 const QuadratureOptions& opt) {
  if (opt.nodes < 2) throw InputError("quadrature needs at least 2 nodes per coordinate");
  if (static_cast<int>(base.size()) != M.dim()) throw InputError("base point has the wrong dimension");
  std::vector<Axis> rule;
  std::size_t total = 1;
  for (int a : axes) {
    if (a < 0 || a >= M.dim()) throw InputError("quadrature axis out of range");
    rule.push_back(quadrature_axis(M.coordinates()[a], opt.nodes, opt.collapsing_ends));
    total *= rule.back().x.size();
  }
  std::vector<double> start(base.begin(), base.end());
  std::vector<double> absolute(total);
  std::vector<double> terms = parallel_map(total, [&](std::size_t idx) {
    const std::size_t slot = idx;
    std::vector<double> p = start;
    double w = 1.0;
    for (std::size_t k = 0; k < axes.size(); ++k) {
      const std::size_t m = rule[k].x.size(), j = idx % m;
      idx /= m;
      p[static_cast<std::size_t>(axes[k])] = rule[k].x[j];
      w *= rule[k].w[j];
    }
    MetricJet mj = metric_at(M, p);
    Mat gl(axes.size(), axes.size());
    for (std::size_t a = 0; a < axes.size(); ++a)
      for (std::size_t b = 0; b < axes.size(); ++b) gl(a, b) = mj.g(axes[a], axes[b]);
    const double v = f(p) * std::sqrt(gl.determinant()) * w;
    absolute[slot] = std::fabs(v);
    return v;
  });
  return {pairwise_sum(terms), pairwise_sum(absolute)};
}

inline std::vector<int> all_axes(const ChartedManifold& M) {
  std::vector<int> axes(static_cast<std::size_t>(M.dim()));
  for (int i = 0; i < M.dim(); ++i) axes[i] = i;
  return axes;
}

}  // namespace detail

/// Tensor-product rule over the coordinates in `axes` (others fixed at
/// `base`) against √det of the metric restricted to those coordinates.
inline double quadrature_over(const ChartedManifold& M, const std::function<double(std::span<const double>)>& f,
                              const std::vector<int>& axes, std::span<const double> base,
                              const QuadratureOptions& opt = {}) {
  return detail::quadrature_sums(M, f, axes, base, opt).first;
}

/// ∫_M f dvol_g.
inline double quadrature_integral(const ChartedManifold& M,
                                  const std::function<double(std::span<const double>)>& f,
                                  const QuadratureOptions& opt = {}) {
  std::vector<double> base(static_cast<std::size_t>(M.dim()), 0.0);
  return quadrature_over(M, f, detail::all_axes(M), base, opt);
}

// ---------------------------------------------------------------------------
// integral formulas

/// S^{N,𝒩}_{mix,X} − ‖T⊤‖² − ‖T⊥‖² + ‖h⊤‖² + ‖h⊥‖² − ‖H⊤‖² − ‖H⊥‖²
/// − ‖X⊤‖²/(2N) − ‖X⊥‖²/(2𝒩).
inline double integral_formula_1_integrand(const WeightedAlmostProduct& W, std::span<const double> p) {
  AdaptedPoint A = adapt(W, p);
  ExtrinsicPack P = extrinsic(A);
  MixedScalar s = mixed_scalar(W, A);
  return s.weighted - P.T_top2 - P.T_bot2 + P.h_top2 + P.h_bot2 - P.H_top2 - P.H_bot2 -
         P.X_top2 / (2 * W.N()) - P.X_bot2 / (2 * W.calN());
}

struct IntegralReport {
  std::string id;
  double value = 0.0;      ///< quadrature value (expected 0)
  double magnitude = 0.0;  ///< quadrature of |integrand|, for scale
  int nodes = 0;
  std::vector<std::pair<int, double>> history;  ///< (nodes, value) per refinement
  double tolerance = kDefaultIdentityTolerance;
  bool pass = false;
};

/// Integrates at opt.nodes, then doubles until two successive values agree to
/// `stable` or the next grid would exceed max_nodes.
inline IntegralReport refine_integral(std::string id, const ChartedManifold& M,
                                      const std::function<double(std::span<const double>)>& f,
                                      const std::vector<int>& axes, std::span<const double> base,
                                      QuadratureOptions opt, int max_nodes, double tolerance,
                                      double stable = 1e-12) {
  IntegralReport r;
  r.id = std::move(id);
  r.tolerance = tolerance;
  for (;;) {
    auto [v, mag] = detail::quadrature_sums(M, f, axes, base, opt);
    r.history.emplace_back(opt.nodes, v);
    r.value = v;
    r.magnitude = mag;
    r.nodes = opt.nodes;
    const std::size_t h = r.history.size();
    if (h >= 2 && std::fabs(r.history[h - 1].second - r.history[h - 2].second) <= stable) break;
    if (2 * opt.nodes > max_nodes) break;
    opt.nodes *= 2;
  }
  r.pass = std::fabs(r.value) <= tolerance;
  return r;
}

inline void require_weights(const WeightedAlmostProduct& W) {
  if (W.N() == 0.0 || W.calN() == 0.0) throw InputError("integral formulas need N and calN nonzero");
}

/// Quadrature of the first integral formula's integrand over a closed chart.
inline IntegralReport integral_formula_1(const WeightedAlmostProduct& W, QuadratureOptions opt = {},
                                         int max_nodes = -1,
                                         double tolerance = kDefaultIdentityTolerance) {
  require_weights(W);
  auto f = [&](std::span<const double> p) { return integral_formula_1_integrand(W, p); };
  std::vector<double> base(static_cast<std::size_t>(W.dim()), 0.0);
  return refine_integral("integral-formula-1", W.manifold(), f, detail::all_axes(W.manifold()), base, opt,
                         max_nodes < 0 ? opt.nodes : max_nodes, tolerance);
}

/// Leafwise integrand S^{N,𝒩}_{mix,X} − ‖T⊥‖² + ‖h⊤‖² + ‖h⊥‖² + ½g(X, H⊥)
/// − ‖X‖²/(2N); checks H⊤ = 0 and X ∈ D⊤ at p.
inline double integral_formula_2_integrand(const WeightedAlmostProduct& W, std::span<const double> p) {
  AdaptedPoint A = adapt(W, p);
  ExtrinsicPack P = extrinsic(A);
  if (std::sqrt(P.H_top2) > kHypothesisTolerance)
    throw HypothesisError("leaf is not minimal: |H-top| = " + std::to_string(std::sqrt(P.H_top2)));
  if (std::sqrt(P.X_bot2) > kHypothesisTolerance)
    throw HypothesisError("X is not tangent to the leaves: |X-perp| = " + std::to_string(std::sqrt(P.X_bot2)));
  MixedScalar s = mixed_scalar(W, A);
  return s.weighted - P.T_bot2 + P.h_top2 + P.h_bot2 + 0.5 * A.ip(A.Xv, P.Hbot) -
         A.norm2(A.Xv) / (2 * W.N());
}

/// Quadrature over the leaf through `base` spanned by the coordinates in
/// `leaf_axes`, which must be periodic and tangent to D⊤.
inline IntegralReport integral_formula_2_leafwise(const WeightedAlmostProduct& W,
                                                  const std::vector<int>& leaf_axes,
                                                  std::span<const double> base, QuadratureOptions opt = {},
                                                  int max_nodes = -1,
                                                  double tolerance = kDefaultIdentityTolerance) {
  require_weights(W);
  if (static_cast<int>(leaf_axes.size()) != W.nu())
    throw InputError("leaf chart needs exactly nu coordinates");
  if (static_cast<int>(base.size()) != W.dim()) throw InputError("base point has the wrong dimension");
  {
    AdaptedPoint A = adapt(W, base, PointGeometry::Level::Connection);
    for (int a : leaf_axes) {
      Vec e = Vec::Zero(W.dim());
      e(a) = 1.0;
      if (std::sqrt(A.norm2(A.perp(e))) > kHypothesisTolerance)
        throw HypothesisError("coordinate x" + std::to_string(a) + " is not tangent to D-top");
    }
  }
  opt.collapsing_ends = false;
  auto f = [&](std::span<const double> p) { return integral_formula_2_integrand(W, p); };
  return refine_integral("integral-formula-2-leaf", W.manifold(), f, leaf_axes, base, opt,
                         max_nodes < 0 ? opt.nodes : max_nodes, tolerance);
}

/// ∫ Div ξ dvol, with the divergence from the jets of ξ and the metric.
inline double divergence_integral(const ChartedManifold& M, const VectorFieldSpec& xi,
                                  const QuadratureOptions& opt = {}) {
  return quadrature_integral(
      M, [&](std::span<const double> p) { return divergence(M, xi, p); }, opt);
}

// ---------------------------------------------------------------------------
// splitting integrands

enum class SplittingVariant { Harmonic, Umbilic };

struct SplittingTerms {
  SplittingVariant variant = SplittingVariant::Harmonic;
  std::vector<std::pair<std::string, double>> terms;  ///< signed terms of the algebraic side
  double algebraic = 0.0;   ///< sum of the terms
  double divergence = 0.0;  ///< divergence side, computed numerically
  double residual = 0.0;    ///< divergence − algebraic
};

/// Harmonic: Div⊤(H⊥ + ½X) = S^{N,𝒩} + ‖h⊥‖² + ‖h⊤‖² − ‖X‖²/(2N), under
/// H⊤ = 0, X ∈ D⊤, g(X, H⊥) = 0, both distributions integrable.
/// Umbilic: Div(H⊥ + H⊤ + ½X) = S^{N,𝒩} − ‖T⊤‖² − ‖T⊥‖² − (n−1)/n ‖H⊥‖²
/// − (ν−1)/ν ‖H⊤‖² − ‖X⊤‖²/(2N) − ‖X⊥‖²/(2𝒩), under both umbilical.
inline SplittingTerms splitting_integrands(const WeightedAlmostProduct& W, std::span<const double> p,
                                           SplittingVariant variant) {
  require_weights(W);
  AdaptedPoint A = adapt(W, p);
  ExtrinsicPack P = extrinsic(A);
  MixedScalar s = mixed_scalar(W, A);
  auto guard = [](double v, const std::string& what) {
    if (std::fabs(v) > kHypothesisTolerance)
      throw HypothesisError(what + " (" + std::to_string(v) + ")");
  };
  SplittingTerms out;
  out.variant = variant;
  const VectorFieldSpec& X = W.X();
  if (variant == SplittingVariant::Harmonic) {
    guard(std::sqrt(P.H_top2), "D-top is not harmonic: |H-top|");
    guard(std::sqrt(P.X_bot2), "X is not tangent to D-top: |X-perp|");
    guard(A.ip(A.Xv, P.Hbot), "g(X, H-perp) is nonzero");
    guard(std::sqrt(P.T_top2), "D-top is not integrable: |T-top|");
    guard(std::sqrt(P.T_bot2), "D-perp is not integrable: |T-perp|");
    out.terms = {{"S_mix_weighted", s.weighted},
                 {"h_bot_norm2", P.h_bot2},
                 {"h_top_norm2", P.h_top2},
                 {"minus_X_norm2_over_2N", -A.norm2(A.Xv) / (2 * W.N())}};
    auto xi = [&](std::span<const double> q) {
      AdaptedPoint B = adapt(W, q, PointGeometry::Level::Connection);
      ExtrinsicPack Q = extrinsic(B);
      return Vec(Q.Hbot + 0.5 * X.value(B.G.p));
    };
    out.divergence = divergences(A, nabla_fd(W, A, xi)).top;
  } else {
    guard(P.h_top2 - P.H_top2 / A.nu, "D-top is not umbilical: |h-top|^2 - |H-top|^2/nu");
    guard(P.h_bot2 - P.H_bot2 / A.n, "D-perp is not umbilical: |h-perp|^2 - |H-perp|^2/n");
    out.terms = {{"S_mix_weighted", s.weighted},
                 {"minus_T_top_norm2", -P.T_top2},
                 {"minus_T_bot_norm2", -P.T_bot2},
                 {"minus_H_bot_term", -(A.n - 1.0) / A.n * P.H_bot2},
                 {"minus_H_top_term", -(A.nu - 1.0) / A.nu * P.H_top2},
                 {"minus_X_top_norm2_over_2N", -P.X_top2 / (2 * W.N())},
                 {"minus_X_bot_norm2_over_2calN", -P.X_bot2 / (2 * W.calN())}};
    auto xi = [&](std::span<const double> q) {
      AdaptedPoint B = adapt(W, q, PointGeometry::Level::Connection);
      ExtrinsicPack Q = extrinsic(B);
      return Vec(Q.Hbot + Q.Htop + 0.5 * X.value(B.G.p));
    };
    out.divergence = divergences(A, nabla_fd(W, A, xi)).full;
  }
  for (const auto& t : out.terms) out.algebraic += t.second;
  out.residual = out.divergence - out.algebraic;
  return out;
}

}  // namespace foliate
