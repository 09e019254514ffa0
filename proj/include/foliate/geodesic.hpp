#pragma once

/// \file geodesic.hpp
/// Geodesics with parallel frames, Riccati and Jacobi flows, blow-up
/// detection, index form, turbulence and the comparison machinery along
/// leaf geodesics.

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "foliate/almost_product.hpp"
#include "foliate/errors.hpp"
#include "foliate/linalg.hpp"
#include "foliate/weighted.hpp"

namespace foliate {

inline constexpr double kBlowUpThreshold = 1e8;
inline constexpr double kMaxSpeedDrift = 1e-5;
inline constexpr int kDefaultSteps = 2000;

using Rhs = std::function<Vec(double, const Vec&)>;
using MatrixProfile = std::function<Mat(double)>;
using ScalarProfile = std::function<double(double)>;

inline Vec rk4_step(const Rhs& f, double t, const Vec& y, double h) {
  Vec k1 = f(t, y);
  Vec k2 = f(t + h / 2, y + h / 2 * k1);
  Vec k3 = f(t + h / 2, y + h / 2 * k2);
  Vec k4 = f(t + h, y + h * k3);
  return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
}

struct FlowOptions {
  double dt = 0.0;            ///< 0: T / kDefaultSteps
  double threshold = kBlowUpThreshold;
  double rel_tol = 1e-9;      ///< per-step half-step estimate tolerance
  double h_min = 1e-7;        ///< blow-up bracket width
  bool refine = true;         ///< sub-step when the estimate is too large
};

struct FlowRun {
  std::vector<double> t;
  std::vector<Vec> y;
  std::optional<double> blow_up;
  double bracket_lo = 0.0, bracket_hi = 0.0;
  int substeps = 0;
  double max_error_estimate = 0.0;
};

namespace detail {

inline int step_count(double T, double dt) {
  if (!(T > 0.0)) throw InputError("integration time must be positive");
  if (dt <= 0.0) return kDefaultSteps;
  return std::max(1, static_cast<int>(std::lround(T / dt)));
}

inline bool finite(const Vec& v) { return v.allFinite(); }

}  // namespace detail

/// Fixed-step RK4 on a uniform grid with a half-step error estimate.
/// `monitor` returns the quantity compared against the blow-up threshold;
/// steps whose estimate fails are subdivided down to h_min, which brackets
/// the blow-up time.
inline FlowRun integrate_flow(const Rhs& f, const Vec& y0, double T, const FlowOptions& opt,
                              const std::function<double(const Vec&)>& monitor) {
  const int K = detail::step_count(T, opt.dt);
  const double dt = T / K;
  FlowRun run;
  run.t.push_back(0.0);
  run.y.push_back(y0);
  // With refinement the two half steps are kept; both results are fourth order.
  auto trial = [&](double t, const Vec& y, double h, Vec& out, double& err) {
    Vec full = rk4_step(f, t, y, h);
    Vec half = rk4_step(f, t + h / 2, rk4_step(f, t, y, h / 2), h / 2);
    out = opt.refine ? half : full;
    bool bad = !detail::finite(full) || !detail::finite(half) || monitor(out) > opt.threshold;
    err = bad ? std::numeric_limits<double>::infinity() : (full - half).norm() / 15.0;
    return bad;
  };
  auto small = [&](double err, const Vec& y) { return err <= opt.rel_tol * (1.0 + y.norm()); };
  std::function<std::optional<Vec>(double, const Vec&, double)> sub =
      [&](double t, const Vec& y, double h) -> std::optional<Vec> {
    Vec out;
    double err;
    bool bad = trial(t, y, h, out, err);
    ++run.substeps;
    if (!bad && small(err, out)) {
      run.max_error_estimate = std::max(run.max_error_estimate, err);
      return out;
    }
    if (h / 2 < opt.h_min) {
      if (bad) {
        run.bracket_lo = t;
        run.bracket_hi = t + h;
        return std::nullopt;
      }
      run.max_error_estimate = std::max(run.max_error_estimate, err);
      return out;
    }
    auto mid = sub(t, y, h / 2);
    if (!mid) return std::nullopt;
    return sub(t + h / 2, *mid, h / 2);
  };
  Vec y = y0;
  for (int k = 0; k < K; ++k) {
    const double t = k * dt;
    Vec out;
    double err;
    bool bad = trial(t, y, dt, out, err);
    if (!opt.refine) {
      if (bad) {
        run.blow_up = t + dt;
        run.bracket_lo = t;
        run.bracket_hi = t + dt;
        break;
      }
      run.max_error_estimate = std::max(run.max_error_estimate, err);
      y = out;
    } else if (!bad && small(err, out)) {
      run.max_error_estimate = std::max(run.max_error_estimate, err);
      y = out;
    } else {
      auto r = sub(t, y, dt / 2);
      if (r) r = sub(t + dt / 2, *r, dt / 2);
      if (!r) {
        run.blow_up = run.bracket_hi;
        break;
      }
      y = *r;
    }
    run.t.push_back((k + 1) * dt);
    run.y.push_back(y);
  }
  return run;
}

namespace detail {

inline Vec flatten(const Mat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }

inline Mat unflatten(const Vec& v, Eigen::Index offset, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Mat>(v.data() + offset, rows, cols);
}

}  // namespace detail

struct LeafGeodesicTrace {
  std::vector<double> t;
  std::vector<Vec> points;      ///< unreduced chart coordinates
  std::vector<Vec> velocities;
  std::vector<Mat> frames;      ///< parallel frame, d × m
  Side along = Side::Top;       ///< distribution containing γ̇(0)
  double speed = 0.0;
  double speed_drift = 0.0;     ///< max relative deviation of |γ̇|
  double tangency_drift = 0.0;  ///< max norm of the component of γ̇ leaving its distribution
  double frame_drift = 0.0;     ///< max |PᵀgP − id|
};

namespace detail {

/// Geodesic plus parallel frame as one state vector: [x, v, vec P].
inline Vec geodesic_rhs(const PointGeometry& G, const Vec& v, const Mat& P) {
  const int d = G.d;
  const Eigen::Index m = P.cols();
  Vec out(2 * d + d * m);
  out.head(d) = v;
  out.segment(d, d) = -G.gamma_contract(v, v);
  for (Eigen::Index c = 0; c < m; ++c) out.segment(2 * d + d * c, d) = -G.gamma_contract(v, P.col(c));
  return out;
}

inline void check_start(const AdaptedPoint& A, const Vec& v, Side along) {
  if (v.size() != A.d) throw InputError("initial velocity has the wrong dimension");
  require_in(A, v, along, "initial velocity");
  if (std::fabs(A.norm2(v) - 1.0) > 1e-8) throw InputError("initial velocity must be unit");
}

}  // namespace detail

struct GeodesicOptions {
  double dt = 0.0;  ///< 0: T / kDefaultSteps
};

/// Geodesic from p with unit initial velocity v in the `along` distribution;
/// the transported frame starts at the adapted basis of the other
/// distribution unless `frame0` is given.
inline LeafGeodesicTrace integrate_geodesic(const WeightedAlmostProduct& W,
                                            std::span<const double> p, const Vec& v, double T,
                                            const GeodesicOptions& opt = {},
                                            Side along = Side::Top,
                                            std::optional<Mat> frame0 = std::nullopt) {
  const ChartedManifold& M = W.manifold();
  AdaptedPoint A = adapt(W, p);
  detail::check_start(A, v, along);
  const int d = A.d;
  Mat P0 = frame0 ? *frame0 : (along == Side::Top ? A.bot_basis() : A.top_basis());
  if (P0.rows() != d) throw InputError("frame has the wrong dimension");
  const Eigen::Index m = P0.cols();
  Vec y0(2 * d + d * m);
  y0.head(d) = Eigen::Map<const Vec>(p.data(), d);
  y0.segment(d, d) = v;
  y0.tail(d * m) = detail::flatten(P0);
  Rhs f = [&](double, const Vec& y) {
    Vec x = y.head(d);
    PointGeometry G = geometry_at(M, std::span<const double>(x.data(), d),
                                  PointGeometry::Level::Connection);
    return detail::geodesic_rhs(G, y.segment(d, d), detail::unflatten(y, 2 * d, d, m));
  };
  FlowOptions fo;
  fo.dt = opt.dt;
  fo.refine = false;
  FlowRun run = integrate_flow(f, y0, T, fo, [](const Vec&) { return 0.0; });
  LeafGeodesicTrace tr;
  tr.along = along;
  tr.t = run.t;
  tr.speed = std::sqrt(A.norm2(v));
  for (const auto& y : run.y) {
    Vec x = y.head(d), vel = y.segment(d, d);
    Mat P = detail::unflatten(y, 2 * d, d, m);
    AdaptedPoint B = adapt(W, std::span<const double>(x.data(), d));
    double sp = std::sqrt(B.norm2(vel));
    tr.speed_drift = std::max(tr.speed_drift, std::fabs(sp - tr.speed) / tr.speed);
    Vec off = along == Side::Top ? B.perp(vel) : B.tang(vel);
    tr.tangency_drift = std::max(tr.tangency_drift, std::sqrt(B.norm2(off)));
    tr.frame_drift = std::max(tr.frame_drift, orthonormality_residual(B.g(), P));
    tr.points.push_back(x);
    tr.velocities.push_back(vel);
    tr.frames.push_back(P);
  }
  if (tr.speed_drift > kMaxSpeedDrift)
    throw NumericalError("geodesic speed drift " + std::to_string(tr.speed_drift) +
                         " exceeds tolerance; reduce the step");
  return tr;
}

struct RiccatiTrace {
  std::vector<double> t;
  std::vector<Mat> B;
  std::optional<double> blow_up;
  double bracket_lo = 0.0, bracket_hi = 0.0;
  bool weighted = false;
  double symmetry_drift = 0.0;    ///< max |B − Bᵀ| (meaningful for symmetric data)
  double max_s2 = 0.0;            ///< max g(X/n, γ̇)² along the trace
  double max_error_estimate = 0.0;
  int substeps = 0;
  std::vector<Vec> points;        ///< geodesic nodes when integrated along γ
};

namespace detail {

inline Vec riccati_rhs(const Mat& B, const Mat& R, double s) {
  Mat dB = -(B * B + 2.0 * s * B + R);
  return flatten(dB);
}

inline RiccatiTrace riccati_from_run(const FlowRun& run, Eigen::Index off, Eigen::Index n,
                                     bool weighted) {
  RiccatiTrace tr;
  tr.t = run.t;
  tr.blow_up = run.blow_up;
  tr.bracket_lo = run.bracket_lo;
  tr.bracket_hi = run.bracket_hi;
  tr.weighted = weighted;
  tr.max_error_estimate = run.max_error_estimate;
  tr.substeps = run.substeps;
  for (const auto& y : run.y) {
    Mat B = unflatten(y, off, n, n);
    tr.symmetry_drift = std::max(tr.symmetry_drift, (B - B.transpose()).norm());
    tr.B.push_back(B);
  }
  return tr;
}

}  // namespace detail

/// Ḃ + B² + 2sB + R = 0 for prescribed R(t) and s(t) (s = 0 if absent).
inline RiccatiTrace riccati_profile(const MatrixProfile& R, const Mat& B0, double T,
                                    const FlowOptions& opt = {}, const ScalarProfile& s = {}) {
  const Eigen::Index n = B0.rows();
  if (B0.cols() != n) throw InputError("B0 must be square");
  Rhs f = [&](double t, const Vec& y) {
    return detail::riccati_rhs(detail::unflatten(y, 0, n, n), R(t), s ? s(t) : 0.0);
  };
  FlowRun run = integrate_flow(f, detail::flatten(B0), T, opt, [](const Vec& y) { return y.norm(); });
  RiccatiTrace tr = detail::riccati_from_run(run, 0, n, static_cast<bool>(s));
  if (s)
    for (double t : tr.t) tr.max_s2 = std::max(tr.max_s2, s(t) * s(t));
  return tr;
}

/// Operator R⊥_{γ̇} (optionally weighted) in the frame P at a point of γ.
inline Mat jacobi_operator_in_frame(const WeightedAlmostProduct& W, const PointGeometry& G,
                                    const Vec& v, const Mat& P, bool weighted, double* s_out) {
  const Eigen::Index n = P.cols();
  Mat R(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) R(i, j) = G.R(P.col(i), v, v, P.col(j));
  R = symmetrize(R);
  double s = 0.0;
  if (weighted) {
    const double nn = static_cast<double>(W.n());
    Vec X = W.X().value(G.p);
    Mat nx = nabla_field(G, W.X());
    Mat gn = G.g() * nx;
    double lie = v.dot((gn + gn.transpose()) * v);
    s = inner(G.g(), X, v) / nn;
    R.diagonal().array() += lie / (2.0 * nn) + s * s;
  }
  if (s_out) *s_out = s;
  return R;
}

/// Riccati flow along the leaf geodesic from p with unit v ∈ D⊤; B0
/// defaults to the co-nullity operator (weighted: its shifted version).
inline RiccatiTrace riccati_flow(const WeightedAlmostProduct& W, std::span<const double> p,
                                 const Vec& v, double T, std::optional<Mat> B0 = std::nullopt,
                                 bool weighted = false, const FlowOptions& opt = {}) {
  const ChartedManifold& M = W.manifold();
  AdaptedPoint A = adapt(W, p);
  detail::check_start(A, v, Side::Top);
  const int d = A.d, n = A.n;
  if (!B0) {
    CoNullity C = co_nullity(A, extrinsic(A), v);
    B0 = weighted ? C.BX : C.B;
  }
  if (B0->rows() != n || B0->cols() != n) throw InputError("B0 must be n×n");
  const Eigen::Index off = 2 * d + d * n;
  Vec y0(off + n * n);
  y0.head(d) = Eigen::Map<const Vec>(p.data(), d);
  y0.segment(d, d) = v;
  y0.segment(2 * d, d * n) = detail::flatten(A.bot_basis());
  y0.tail(n * n) = detail::flatten(*B0);
  Rhs f = [&](double, const Vec& y) {
    Vec x = y.head(d), vel = y.segment(d, d);
    Mat P = detail::unflatten(y, 2 * d, d, n);
    PointGeometry G = geometry_at(M, std::span<const double>(x.data(), d));
    double s = 0.0;
    Mat R = jacobi_operator_in_frame(W, G, vel, P, weighted, &s);
    Vec out(y.size());
    out.head(off) = detail::geodesic_rhs(G, vel, P);
    out.tail(n * n) = detail::riccati_rhs(detail::unflatten(y, off, n, n), R, s);
    return out;
  };
  FlowRun run = integrate_flow(f, y0, T, opt, [&](const Vec& y) { return y.tail(n * n).norm(); });
  RiccatiTrace tr = detail::riccati_from_run(run, off, n, weighted);
  for (const auto& y : run.y) {
    tr.points.push_back(y.head(d));
    if (weighted) {
      Vec x = y.head(d);
      double s = inner(metric_at(M, std::span<const double>(x.data(), d)).g,
                       W.X().value(std::span<const double>(x.data(), d)), y.segment(d, d)) /
                 n;
      tr.max_s2 = std::max(tr.max_s2, s * s);
    }
  }
  return tr;
}

struct JacobiTrace {
  std::vector<double> t;
  std::vector<Mat> Y, Ydot;
  double min_sigma_stacked = std::numeric_limits<double>::infinity();  ///< σ_min([Y; Ẏ])
  std::vector<double> sigma_min_Y;
  std::vector<Vec> points;
};

namespace detail {

inline JacobiTrace jacobi_from_run(const FlowRun& run, Eigen::Index off, Eigen::Index n,
                                   Eigen::Index m) {
  JacobiTrace tr;
  tr.t = run.t;
  for (const auto& y : run.y) {
    Mat Y = unflatten(y, off, n, m), Yd = unflatten(y, off + n * m, n, m);
    Mat stacked(2 * n, m);
    stacked << Y, Yd;
    Eigen::JacobiSVD<Mat> s1(stacked), s2(Y);
    tr.min_sigma_stacked = std::min(tr.min_sigma_stacked, s1.singularValues()(m - 1));
    tr.sigma_min_Y.push_back(s2.singularValues()(s2.singularValues().size() - 1));
    tr.Y.push_back(Y);
    tr.Ydot.push_back(Yd);
  }
  return tr;
}

inline void check_jacobi_data(const Mat& Y0, const Mat& Yd0) {
  if (Y0.rows() != Yd0.rows() || Y0.cols() != Yd0.cols())
    throw InputError("Y0 and Ydot0 must have equal shapes");
  Mat stacked(2 * Y0.rows(), Y0.cols());
  stacked << Y0, Yd0;
  Eigen::JacobiSVD<Mat> svd(stacked);
  if (svd.singularValues()(Y0.cols() - 1) < 1e-12) throw InputError("[Y0; Ydot0] must have full rank");
}

}  // namespace detail

/// Ÿ + R(t) Y = 0 for a prescribed profile; Y may have any number of columns.
inline JacobiTrace jacobi_profile(const MatrixProfile& R, const Mat& Y0, const Mat& Yd0, double T,
                                  double dt = 0.0) {
  detail::check_jacobi_data(Y0, Yd0);
  const Eigen::Index n = Y0.rows(), m = Y0.cols();
  Vec y0(2 * n * m);
  y0 << detail::flatten(Y0), detail::flatten(Yd0);
  Rhs f = [&](double t, const Vec& y) {
    Vec out(y.size());
    out.head(n * m) = y.tail(n * m);
    out.tail(n * m) = detail::flatten(-R(t) * detail::unflatten(y, 0, n, m));
    return out;
  };
  FlowOptions fo;
  fo.dt = dt;
  fo.refine = false;
  fo.threshold = std::numeric_limits<double>::infinity();
  return detail::jacobi_from_run(integrate_flow(f, y0, T, fo, [](const Vec&) { return 0.0; }), 0, n, m);
}

/// Jacobi tensor along the leaf geodesic from p with unit v ∈ D⊤.
inline JacobiTrace jacobi_flow(const WeightedAlmostProduct& W, std::span<const double> p,
                               const Vec& v, double T, const Mat& Y0, const Mat& Yd0,
                               double dt = 0.0) {
  const ChartedManifold& M = W.manifold();
  AdaptedPoint A = adapt(W, p);
  detail::check_start(A, v, Side::Top);
  detail::check_jacobi_data(Y0, Yd0);
  const int d = A.d, n = A.n;
  if (Y0.rows() != n) throw InputError("Y0 must have n rows");
  const Eigen::Index m = Y0.cols(), off = 2 * d + d * n;
  Vec y0(off + 2 * n * m);
  y0.head(d) = Eigen::Map<const Vec>(p.data(), d);
  y0.segment(d, d) = v;
  y0.segment(2 * d, d * n) = detail::flatten(A.bot_basis());
  y0.tail(2 * n * m) << detail::flatten(Y0), detail::flatten(Yd0);
  Rhs f = [&](double, const Vec& y) {
    Vec x = y.head(d), vel = y.segment(d, d);
    Mat P = detail::unflatten(y, 2 * d, d, n);
    PointGeometry G = geometry_at(M, std::span<const double>(x.data(), d));
    Mat R = jacobi_operator_in_frame(W, G, vel, P, false, nullptr);
    Vec out(y.size());
    out.head(off) = detail::geodesic_rhs(G, vel, P);
    out.segment(off, n * m) = y.tail(n * m);
    out.tail(n * m) = detail::flatten(-R * detail::unflatten(y, off, n, m));
    return out;
  };
  FlowOptions fo;
  fo.dt = dt;
  fo.refine = false;
  fo.threshold = std::numeric_limits<double>::infinity();
  FlowRun run = integrate_flow(f, y0, T, fo, [](const Vec&) { return 0.0; });
  JacobiTrace tr = detail::jacobi_from_run(run, off, n, m);
  for (const auto& y : run.y) tr.points.push_back(y.head(d));
  return tr;
}

// ---------------------------------------------------------------------------
// Index form

struct IndexForm {
  double value = 0.0;
  double integral = 0.0;
  double boundary = 0.0;
};

namespace detail {

/// Composite Simpson on a uniform grid; a trailing odd interval uses the
/// 3/8 rule.
inline double simpson(const std::vector<double>& f, double h) {
  const std::size_t K = f.size() - 1;
  if (K == 0) return 0.0;
  if (K == 1) return 0.5 * h * (f[0] + f[1]);
  std::size_t even = K % 2 == 0 ? K : K - 3;
  double s = 0.0;
  for (std::size_t i = 0; i + 2 <= even; i += 2) s += h / 3 * (f[i] + 4 * f[i + 1] + f[i + 2]);
  if (even != K)
    s += 3 * h / 8 * (f[even] + 3 * f[even + 1] + 3 * f[even + 2] + f[even + 3]);
  return s;
}

/// Fourth-order central differences in the interior, second-order one-sided
/// at the ends.
inline std::vector<Vec> differentiate(const std::vector<Vec>& x, double h) {
  const std::size_t K = x.size();
  std::vector<Vec> dx(K);
  if (K < 5) throw InputError("need at least five nodes to differentiate");
  for (std::size_t i = 0; i < K; ++i) {
    if (i >= 2 && i + 2 < K)
      dx[i] = (-x[i + 2] + 8 * x[i + 1] - 8 * x[i - 1] + x[i - 2]) / (12 * h);
    else if (i < 2)
      dx[i] = (-3 * x[i] + 4 * x[i + 1] - x[i + 2]) / (2 * h);
    else
      dx[i] = (3 * x[i] - 4 * x[i - 1] + x[i - 2]) / (2 * h);
  }
  return dx;
}

}  // namespace detail

/// I(x, x) = ∫ |ẋ − g(γ̇,X) x|² − K⊤_X(γ̇, x̂)|x|² dt + g(γ̇,X)|x|² |_a^b,
/// with K⊤_X(γ̇, x̂)|x|² = R(x,γ̇,γ̇,x) + w⊤(γ̇)|x|² so the form is quadratic in x.
/// `x` holds coordinate components at the trace nodes; `xdot`, if given,
/// holds ∇_{γ̇} x, otherwise it is formed from central differences.
/// `extra_boundary` is added verbatim for leaf-to-leaf variations.
inline IndexForm index_form(const WeightedAlmostProduct& W, const LeafGeodesicTrace& tr,
                            const std::vector<Vec>& x, const std::vector<Vec>* xdot = nullptr,
                            double extra_boundary = 0.0) {
  const std::size_t K = tr.t.size();
  if (x.size() != K) throw InputError("variation field needs one value per trace node");
  if (xdot && xdot->size() != K) throw InputError("derivative needs one value per trace node");
  const double h = K > 1 ? tr.t[1] - tr.t[0] : 1.0;
  std::vector<Vec> dx;
  if (!xdot) dx = detail::differentiate(x, h);
  const double nu = W.nu();
  std::vector<double> integrand(K);
  auto gXv = [&](std::size_t k, const PointGeometry& G) {
    return inner(G.g(), W.X().value(G.p), tr.velocities[k]);
  };
  double gb = 0.0, ga = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const Vec& pt = tr.points[k];
    PointGeometry G = geometry_at(W.manifold(), std::span<const double>(pt.data(), pt.size()));
    const Vec& v = tr.velocities[k];
    Vec cov = xdot ? (*xdot)[k] : Vec(dx[k] + G.gamma_contract(v, x[k]));
    double s = gXv(k, G);
    Vec a = cov - s * x[k];
    Mat nx = nabla_field(G, W.X());
    Mat gn = G.g() * nx;
    double lie = v.dot((gn + gn.transpose()) * v);
    double w = lie / (2.0 * nu) + s * s / (nu * nu);
    double x2 = inner(G.g(), x[k], x[k]);
    integrand[k] = inner(G.g(), a, a) - (G.R(x[k], v, v, x[k]) + w * x2);
    if (k == 0) ga = s * x2;
    if (k + 1 == K) gb = s * x2;
  }
  IndexForm r;
  r.integral = detail::simpson(integrand, h);
  r.boundary = gb - ga + extra_boundary;
  r.value = r.integral + r.boundary;
  return r;
}

/// x(t) = Σ_c f_c(t) P_c(t) for a parallel frame P; returns values and exact
/// covariant derivatives.
inline std::pair<std::vector<Vec>, std::vector<Vec>> parallel_variation(
    const LeafGeodesicTrace& tr, const std::function<Vec(double)>& f,
    const std::function<Vec(double)>& df) {
  std::pair<std::vector<Vec>, std::vector<Vec>> out;
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    out.first.push_back(tr.frames[k] * f(tr.t[k]));
    out.second.push_back(tr.frames[k] * df(tr.t[k]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Turbulence

/// sup g(B y, z) over orthonormal y, z, i.e. max over unit y of |(I − yyᵀ) B y|.
inline double pairing_sup(const Mat& B, Vec* arg = nullptr) {
  const int n = static_cast<int>(B.rows());
  if (n < 2) return 0.0;
  auto value = [&](const Vec& y) {
    Vec by = B * y;
    return (by - y.dot(by) * y).norm();
  };
  double best = -1.0;
  Vec yb;
  for (const auto& y : sphere_directions(n, n == 2 ? 2048 : default_direction_count(n))) {
    double v = value(y);
    if (v > best) {
      best = v;
      yb = y;
    }
  }
  double step = n == 2 ? std::numbers::pi / 2048 : 0.05;
  for (int it = 0; it < 200 && step > 1e-12; ++it) {
    bool moved = false;
    for (int i = 0; i < n && !moved; ++i)
      for (double sgn : {1.0, -1.0}) {
        Vec y = yb;
        y(i) += sgn * step;
        y.normalize();
        double v = value(y);
        if (v > best) {
          best = v;
          yb = y;
          moved = true;
          break;
        }
      }
    if (!moved) step *= 0.5;
  }
  if (arg) *arg = yb;
  return best;
}

/// Spectral norm of the antisymmetric part of B.
inline double antisymmetric_norm(const Mat& B) {
  Mat a = 0.5 * (B - B.transpose());
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues()(0);
}

struct Turbulence {
  double a = 0.0;                 ///< sup of g(B_x y, z)
  double antisymmetric = 0.0;     ///< sup of the antisymmetric-part spectral norm
  double h_top_max = 0.0;         ///< largest |h⊤| seen (should vanish)
  bool totally_geodesic = true;
  std::vector<double> witness_point;
  Vec witness_x;
  int samples = 0;
};

inline Turbulence turbulence(const WeightedAlmostProduct& W,
                             const std::vector<std::vector<double>>& points, int x_directions = 0) {
  Turbulence t;
  for (const auto& p : points) {
    AdaptedPoint A = adapt(W, p);
    ExtrinsicPack P = extrinsic(A);
    t.h_top_max = std::max(t.h_top_max, std::sqrt(P.h_top2));
    int count = x_directions > 0 ? x_directions : std::min(default_direction_count(A.nu), 256);
    for (const auto& c : sphere_directions(A.nu, count)) {
      Vec x = A.top_basis() * c;
      CoNullity C = co_nullity(A, P, x);
      double v = pairing_sup(C.B);
      t.antisymmetric = std::max(t.antisymmetric, antisymmetric_norm(C.B));
      if (v > t.a) {
        t.a = v;
        t.witness_point = A.G.p;
        t.witness_x = x;
      }
      ++t.samples;
    }
  }
  t.totally_geodesic = t.h_top_max < kTotallyGeodesicTolerance;
  return t;
}

// ---------------------------------------------------------------------------
// Principal angles

struct ExtremalBases {
  Mat a, b;    ///< columns are the paired orthonormal bases
  Vec cosines; ///< cosines of the principal angles, descending
};

inline ExtremalBases extremal_angle_bases(const Mat& V1, const Mat& V2) {
  if (V1.rows() != V2.rows() || V1.cols() != V2.cols())
    throw InputError("subspaces must have equal dimension in the same ambient space");
  const Eigen::Index m = V1.cols();
  auto orth = [&](const Mat& V) {
    Eigen::ColPivHouseholderQR<Mat> qr(V);
    if (qr.rank() < m) throw InputError("spanning set is rank deficient");
    Mat Q = qr.householderQ() * Mat::Identity(V.rows(), m);
    return Q;
  };
  Mat Q1 = orth(V1), Q2 = orth(V2);
  Eigen::JacobiSVD<Mat> svd(Q1.transpose() * Q2, Eigen::ComputeFullU | Eigen::ComputeFullV);
  ExtremalBases r;
  r.a = Q1 * svd.matrixU();
  r.b = Q2 * svd.matrixV();
  r.cosines = svd.singularValues();
  return r;
}

// ---------------------------------------------------------------------------
// Comparison machinery

struct EnvelopeBound {
  std::vector<double> t, u, bound;
  bool holds = true;
  double worst_margin = std::numeric_limits<double>::infinity();  ///< min(bound − |u|)
  double measured_eps = 0.0;  ///< max ‖R(t) − k id‖ on the nodes
};

/// Solves ÿ + R(t) y = 0 on [0, π/√k] and compares u = y − ȳ with the
/// envelope ε₁/(k − (1 − cos√k t)ε₁) ∫₀ᵗ √k |ȳ(s)| sin(√k(t − s)) ds.
inline EnvelopeBound lemma47_envelope(double k, double eps1, const MatrixProfile& R, const Vec& y0,
                                const Vec& yp0, int steps = kDefaultSteps, int quad = 1024) {
  if (!(k > 0.0)) throw InputError("k must be positive");
  if (!(eps1 >= 0.0 && eps1 < k / 2)) throw InputError("eps1 must satisfy 0 <= eps1 < k/2");
  const double sk = std::sqrt(k), T = std::numbers::pi / sk;
  const Eigen::Index n = y0.size();
  EnvelopeBound out;
  for (int i = 0; i <= steps; ++i) {
    Mat D = R(T * i / steps) - k * Mat::Identity(n, n);
    Eigen::JacobiSVD<Mat> svd(D);
    out.measured_eps = std::max(out.measured_eps, svd.singularValues()(0));
  }
  if (out.measured_eps > eps1 + 1e-12)
    throw InputError("profile violates |R(t) - k id| <= eps1 (measured " +
                     std::to_string(out.measured_eps) + ")");
  JacobiTrace jt = jacobi_profile(R, y0, yp0, T, T / steps);
  auto ybar = [&](double s) { return Vec(y0 * std::cos(sk * s) + yp0 * std::sin(sk * s) / sk); };
  for (std::size_t j = 0; j < jt.t.size(); ++j) {
    double t = jt.t[j];
    Vec u = jt.Y[j].col(0) - ybar(t);
    std::vector<double> f(static_cast<std::size_t>(quad) + 1);
    for (int q = 0; q <= quad; ++q) {
      double s = t * q / quad;
      f[q] = sk * ybar(s).norm() * std::sin(sk * (t - s));
    }
    double integral = detail::simpson(f, t / quad);
    double b = eps1 / (k - (1.0 - std::cos(sk * t)) * eps1) * integral;
    out.t.push_back(t);
    out.u.push_back(u.norm());
    out.bound.push_back(b);
    double margin = b - u.norm();
    out.worst_margin = std::min(out.worst_margin, margin);
    if (u.norm() > b + 1e-8) out.holds = false;
  }
  return out;
}

struct VT {
  std::vector<double> t, V, dV, bound;
  bool holds = true;
  double worst_margin = std::numeric_limits<double>::infinity();
  double drift = 0.0;  ///< max |V(t) − V(0)|
  std::optional<double> first_local_min;
};

/// V(t) = |y| |ỹ′| with ỹ′ the part of y′ orthogonal to y; checks
/// |V′| ≤ (½(k₂ − k₁) + ε)|y|² with V′ from central differences.
inline VT vt_machinery(const std::vector<double>& t, const std::vector<Vec>& y,
                       const std::vector<Vec>& yp, double k1, double k2, double eps,
                       double tol = 1e-7) {
  const std::size_t K = t.size();
  if (y.size() != K || yp.size() != K || K < 5) throw InputError("V(t) needs at least five nodes");
  VT out;
  out.t = t;
  for (std::size_t i = 0; i < K; ++i) {
    double yy = y[i].squaredNorm(), yd = y[i].dot(yp[i]);
    double V2 = yy * yp[i].squaredNorm() - yd * yd;
    out.V.push_back(std::sqrt(std::max(0.0, V2)));
  }
  const double h = t[1] - t[0];
  out.dV.assign(K, std::numeric_limits<double>::quiet_NaN());
  out.bound.assign(K, 0.0);
  for (std::size_t i = 0; i < K; ++i) {
    out.drift = std::max(out.drift, std::fabs(out.V[i] - out.V[0]));
    out.bound[i] = (0.5 * (k2 - k1) + eps) * y[i].squaredNorm();
    if (i < 2 || i + 2 >= K) continue;
    double dv = (-out.V[i + 2] + 8 * out.V[i + 1] - 8 * out.V[i - 1] + out.V[i - 2]) / (12 * h);
    out.dV[i] = dv;
    double margin = out.bound[i] - std::fabs(dv);
    out.worst_margin = std::min(out.worst_margin, margin);
    if (margin < -tol * (1.0 + y[i].squaredNorm())) out.holds = false;
  }
  for (std::size_t i = 1; i + 1 < K; ++i) {
    double a = y[i - 1].norm(), b = y[i].norm(), c = y[i + 1].norm();
    if (b < a && b <= c) {
      out.first_local_min = t[i];
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Blow-up scenario on the weighted Hopf fibration

struct HopfBlowupRow {
  double lambda0 = 0.0;
  double closed_form = 0.0;   ///< predicted blow-up time
  std::optional<double> scalar;  ///< scalar Riccati λ̇ + λ² + 2sλ + k' = 0
  std::optional<double> matrix;  ///< matrix Riccati along an actual fibre
};

struct HopfBlowup {
  double eps = 0.0, k_weighted = 0.0, s = 0.0, k_effective = 0.0;
  std::vector<HopfBlowupRow> rows;
};

/// Expects the Hopf chart of the gallery. With X = ε ξ, R⊥_{X,γ̇} = (1 + ε²/4) id and
/// g(X/n, γ̇) = ε/2 along fibres; B₀ = λ₀ id blows up at
/// (π/2 + arctan((λ₀ + s)/√k))/√k with k = k' − s².
inline HopfBlowup weighted_hopf_blowup(const WeightedAlmostProduct& hopf_plain, double eps,
                                       const std::vector<double>& lambdas,
                                       const FlowOptions& opt = {}) {
  std::string c = detail::format_number(eps);
  WeightedAlmostProduct hopf = hopf_plain.with_X(VectorFieldSpec::from_strings({"0", c, c}, 3, "eps*xi"));
  HopfBlowup fs;
  fs.eps = eps;
  fs.s = eps / 2;
  fs.k_weighted = 1.0 + eps * eps / 4;
  fs.k_effective = fs.k_weighted - fs.s * fs.s;
  const double sk = std::sqrt(fs.k_effective);
  std::vector<double> p{0.6, 0.3, 1.2};
  AdaptedPoint A = adapt(hopf, p);
  Vec v = A.top(0);
  for (double l0 : lambdas) {
    HopfBlowupRow row;
    row.lambda0 = l0;
    row.closed_form = (std::numbers::pi / 2 + std::atan((l0 + fs.s) / sk)) / sk;
    double T = row.closed_form + 0.5;
    FlowOptions o = opt;
    if (o.dt <= 0.0) o.dt = T / kDefaultSteps;
    Mat b0(1, 1);
    b0 << l0;
    const double kw = fs.k_weighted, s = fs.s;
    row.scalar = riccati_profile([&](double) { return Mat::Constant(1, 1, kw); }, b0, T, o,
                                 [&](double) { return s; })
                     .blow_up;
    row.matrix = riccati_flow(hopf, p, v, T, l0 * Mat::Identity(2, 2), true, o).blow_up;
    fs.rows.push_back(row);
  }
  return fs;
}

}  // namespace foliate
