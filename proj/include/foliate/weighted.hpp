#pragma once

/// \file weighted.hpp
/// Weighted mixed curvatures and the mixed curvature-dimension check.
///
/// For y ∈ D⊥ and x ∈ D⊤ the weight terms are
///
///   w⊤(y) = ½ 𝓛_{X/ν} g(y,y) + (ν/𝒩) g(X/ν, y)²,
///   w⊥(x) = ½ 𝓛_{X/n} g(x,x) + (n/N) g(X/n, x)²,
///
/// and Ric^{⊤,𝒩}_{q,X}(y; W) = Σ_i K(y, x_i) + q w⊤(y).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "foliate/almost_product.hpp"
#include "foliate/errors.hpp"
#include "foliate/linalg.hpp"

namespace foliate {

inline constexpr double kUnitTolerance = 1e-10;

inline double weight_top(const WeightedAlmostProduct& W, const AdaptedPoint& A, const Vec& y) {
  const double nu = A.nu;
  double gx = A.ip(A.Xv, y);
  return A.lie(y, y) / (2.0 * nu) + gx * gx / (nu * W.calN());
}

inline double weight_bot(const WeightedAlmostProduct& W, const AdaptedPoint& A, const Vec& x) {
  const double n = A.n;
  double gx = A.ip(A.Xv, x);
  return A.lie(x, x) / (2.0 * n) + gx * gx / (n * W.N());
}

namespace detail {

inline void require_unit(const AdaptedPoint& A, const Vec& v, const char* what) {
  if (std::fabs(A.norm2(v) - 1.0) > kUnitTolerance)
    throw InputError(std::string(what) + " must be a unit vector");
}

inline void require_orthonormal(const AdaptedPoint& A, const std::vector<Vec>& frame, Side side) {
  for (std::size_t i = 0; i < frame.size(); ++i) {
    require_in(A, frame[i], side, "frame vector");
    for (std::size_t j = 0; j < frame.size(); ++j) {
      double e = A.ip(frame[i], frame[j]) - (i == j ? 1.0 : 0.0);
      if (std::fabs(e) > kUnitTolerance) throw InputError("W_q is not orthonormal");
    }
  }
}

}  // namespace detail

/// K^{⊤,𝒩}_X(y, x) for unit y ∈ D⊥, x ∈ D⊤.
inline double mixed_sectional_weighted(const WeightedAlmostProduct& W, const AdaptedPoint& A,
                                       const Vec& y, const Vec& x) {
  require_in(A, y, Side::Bot, "y");
  require_in(A, x, Side::Top, "x");
  detail::require_unit(A, y, "y");
  detail::require_unit(A, x, "x");
  return sectional(A.G, y, x) + weight_top(W, A, y) * A.norm2(x);
}

/// K^{⊥,N}_X(x, y) for unit x ∈ D⊤, y ∈ D⊥.
inline double mixed_sectional_weighted_bot(const WeightedAlmostProduct& W, const AdaptedPoint& A,
                                           const Vec& x, const Vec& y) {
  require_in(A, y, Side::Bot, "y");
  require_in(A, x, Side::Top, "x");
  detail::require_unit(A, y, "y");
  detail::require_unit(A, x, "x");
  return sectional(A.G, x, y) + weight_bot(W, A, x) * A.norm2(y);
}

struct PartialRicci {
  int q = 0;
  double plain = 0.0;      ///< Σ K(y, x_i)
  double weighted = 0.0;   ///< with synthetic dimension 𝒩 (resp. N)
  double rank_weighted = 0.0;  ///< with 𝒩 = ν (resp. N = n)
  double g_X_y = 0.0;      ///< g(X, y)
};

/// Ric⊤_q(y; W), Ric^{⊤,𝒩}_{q,X}(y; W) and Ric^⊤_{q,X}(y; W).
inline PartialRicci partial_ricci_q(const WeightedAlmostProduct& W, const AdaptedPoint& A,
                                    const Vec& y, const std::vector<Vec>& Wq) {
  const int q = static_cast<int>(Wq.size());
  if (q < 1 || q > A.nu) throw InputError("q must lie in 1..nu");
  require_in(A, y, Side::Bot, "y");
  detail::require_unit(A, y, "y");
  detail::require_orthonormal(A, Wq, Side::Top);
  PartialRicci r;
  r.q = q;
  for (const auto& x : Wq) r.plain += A.G.R(y, x, x, y);
  const double nu = A.nu;
  r.g_X_y = A.ip(A.Xv, y);
  double lie = A.lie(y, y);
  r.weighted = r.plain + q * (lie / (2.0 * nu) + r.g_X_y * r.g_X_y / (nu * W.calN()));
  r.rank_weighted = r.plain + q * (lie / (2.0 * nu) + r.g_X_y * r.g_X_y / (nu * nu));
  return r;
}

/// Ric⊥_q(x; W), Ric^{⊥,N}_{q,X}(x; W) and Ric^⊥_{q,X}(x; W) for W ⊂ D⊥.
inline PartialRicci partial_ricci_q_bot(const WeightedAlmostProduct& W, const AdaptedPoint& A,
                                        const Vec& x, const std::vector<Vec>& Wq) {
  const int q = static_cast<int>(Wq.size());
  if (q < 1 || q > A.n) throw InputError("q must lie in 1..n");
  require_in(A, x, Side::Top, "x");
  detail::require_unit(A, x, "x");
  detail::require_orthonormal(A, Wq, Side::Bot);
  PartialRicci r;
  r.q = q;
  for (const auto& y : Wq) r.plain += A.G.R(x, y, y, x);
  const double n = A.n;
  r.g_X_y = A.ip(A.Xv, x);
  double lie = A.lie(x, x);
  r.weighted = r.plain + q * (lie / (2.0 * n) + r.g_X_y * r.g_X_y / (n * W.N()));
  r.rank_weighted = r.plain + q * (lie / (2.0 * n) + r.g_X_y * r.g_X_y / (n * n));
  return r;
}

/// Closed-form shift Ric^{⊤,𝒩}_{q,X} − Ric^⊤_{q,X}:
/// q (𝒩 − ν)/ν² g(X, y)².
inline double ricci_shift_closed_form(int q, int nu, double calN, double g_X_y) {
  return q * (calN - nu) / (static_cast<double>(nu) * nu) * g_X_y * g_X_y;
}

/// The same shift as implied by the definition: q (ν − 𝒩)/(ν² 𝒩) g(X, y)².
inline double ricci_shift_definition(int q, int nu, double calN, double g_X_y) {
  return q * (nu - calN) / (static_cast<double>(nu) * nu * calN) * g_X_y * g_X_y;
}

/// Sum of the q smallest eigenvalues of a symmetric matrix.
inline double ky_fan_min(const Mat& S, int q) {
  Vec ev = sym_eigenvalues(S);
  double s = 0.0;
  for (int i = 0; i < q; ++i) s += ev(i);
  return s;
}

/// Deterministic, roughly uniform unit directions in ℝ^m.
inline std::vector<Vec> sphere_directions(int m, int count) {
  std::vector<Vec> out;
  if (m == 1) {
    out.push_back(Vec::Ones(1));
    return out;
  }
  if (m == 2) {
    for (int k = 0; k < count; ++k) {
      double t = std::numbers::pi * k / count;  // the objective is even in y
      Vec v(2);
      v << std::cos(t), std::sin(t);
      out.push_back(v);
    }
    return out;
  }
  if (m == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < count; ++k) {
      double z = 1.0 - (2.0 * k + 1.0) / count;
      double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      Vec v(3);
      v << r * std::cos(golden * k), r * std::sin(golden * k), z;
      out.push_back(v);
    }
    return out;
  }
  // R_m low-discrepancy sequence pushed through Box–Muller.
  const int dims = m + (m % 2);
  double phi = 2.0;
  for (int it = 0; it < 64; ++it) phi = std::pow(1.0 + phi, 1.0 / (dims + 1));
  std::vector<double> alpha(static_cast<std::size_t>(dims));
  for (int j = 0; j < dims; ++j) alpha[j] = std::fmod(std::pow(1.0 / phi, j + 1), 1.0);
  for (int k = 0; k < count; ++k) {
    std::vector<double> u(static_cast<std::size_t>(dims));
    for (int j = 0; j < dims; ++j) u[j] = std::fmod(0.5 + alpha[j] * (k + 1), 1.0);
    Vec v(m);
    for (int j = 0; j + 1 < dims; j += 2) {
      double r = std::sqrt(-2.0 * std::log(std::max(u[j], 1e-300)));
      double t = 2.0 * std::numbers::pi * u[j + 1];
      v(j) = r * std::cos(t);
      if (j + 1 < m) v(j + 1) = r * std::sin(t);
    }
    double len = v.norm();
    if (len > 1e-12) out.push_back(v / len);
  }
  return out;
}

inline int default_direction_count(int m) { return m <= 3 ? 512 : 4096; }

struct MinRicciResult {
  double value = 0.0;
  Vec direction;     ///< minimizing unit y (components)
  std::vector<Vec> frame;  ///< minimizing orthonormal W_q (components)
  int directions = 0;
  int refinement_steps = 0;
};

struct MinRicciOptions {
  int directions = 0;  ///< 0: default by dimension
  int refinement_steps = 20;
};

/// Exact inner minimization over W_q (Ky Fan) with sampled outer
/// minimization over unit y in the opposite distribution.
inline MinRicciResult min_partial_ricci(const WeightedAlmostProduct& W, const AdaptedPoint& A,
                                        int q, Side side = Side::Top,
                                        const MinRicciOptions& opt = {}) {
  const bool top = side == Side::Top;
  const int inner = top ? A.nu : A.n;   // dimension W_q lives in
  const int outer = top ? A.n : A.nu;   // dimension y lives in
  if (q < 1 || q > inner) throw InputError("q out of range for the chosen side");
  const int in_off = top ? 0 : A.nu, out_off = top ? A.nu : 0;
  // Q[a*inner+b](i,j) = R(e_a, f_i, f_j, e_b); weight form Wm(i,j).
  std::vector<Mat> Q(static_cast<std::size_t>(inner * inner), Mat::Zero(outer, outer));
  for (int a = 0; a < inner; ++a)
    for (int b = 0; b < inner; ++b)
      for (int i = 0; i < outer; ++i)
        for (int j = 0; j < outer; ++j)
          Q[a * inner + b](i, j) =
              A.G.R(A.e(in_off + a), A.e(out_off + i), A.e(out_off + j), A.e(in_off + b));
  const double rank = top ? A.nu : A.n;
  const double synth = top ? W.calN() : W.N();
  Mat Wm(outer, outer);
  for (int i = 0; i < outer; ++i)
    for (int j = 0; j < outer; ++j) {
      Vec fi = A.e(out_off + i), fj = A.e(out_off + j);
      Wm(i, j) = A.lie(fi, fj) / (2.0 * rank) + A.ip(A.Xv, fi) * A.ip(A.Xv, fj) / (rank * synth);
    }
  Wm = symmetrize(Wm);
  auto op = [&](const Vec& c) {
    Mat S(inner, inner);
    for (int a = 0; a < inner; ++a)
      for (int b = 0; b < inner; ++b) S(a, b) = c.dot(Q[a * inner + b] * c);
    return symmetrize(S);
  };
  auto objective = [&](const Vec& c) { return ky_fan_min(op(c), q) + q * c.dot(Wm * c); };

  int count = opt.directions > 0 ? opt.directions : default_direction_count(outer);
  auto dirs = sphere_directions(outer, count);
  Vec best = dirs.front();
  double fbest = std::numeric_limits<double>::infinity();
  for (const auto& c : dirs) {
    double f = objective(c);
    if (f < fbest) {
      fbest = f;
      best = c;
    }
  }
  int steps = 0;
  if (outer > 1) {
    double alpha = 0.1;
    const double h = 1e-6;
    for (int it = 0; it < opt.refinement_steps; ++it) {
      Vec grad(outer);
      for (int i = 0; i < outer; ++i) {
        Vec cp = best, cm = best;
        cp(i) += h;
        cm(i) -= h;
        grad(i) = (objective(cp / cp.norm()) - objective(cm / cm.norm())) / (2 * h);
      }
      grad -= grad.dot(best) * best;
      if (grad.norm() < 1e-12) break;
      bool moved = false;
      for (int tries = 0; tries < 30 && !moved; ++tries) {
        Vec c = best - alpha * grad;
        c /= c.norm();
        double f = objective(c);
        if (f < fbest) {
          fbest = f;
          best = c;
          moved = true;
          alpha *= 1.5;
        } else {
          alpha *= 0.5;
        }
      }
      ++steps;
      if (!moved) break;
    }
  }
  MinRicciResult r;
  r.value = fbest;
  r.direction = A.E.middleCols(out_off, outer) * best;
  Eigen::SelfAdjointEigenSolver<Mat> es(op(best));
  for (int k = 0; k < q; ++k) r.frame.push_back(A.E.middleCols(in_off, inner) * es.eigenvectors().col(k));
  r.directions = static_cast<int>(dirs.size());
  r.refinement_steps = steps;
  return r;
}

struct CDResult {
  bool holds = false;
  double margin = 0.0;  ///< min − c
  double minimum = 0.0;
  std::vector<double> witness_point;
  Vec witness_direction;
  std::vector<Vec> witness_frame;
  int points = 0;
  int directions = 0;
};

/// CD⊤(c, 𝒩, q) (or CD⊥(c, N, q)) on a list of sample points.
inline CDResult cd_check(const WeightedAlmostProduct& W, double c, int q, Side side,
                         const std::vector<std::vector<double>>& points,
                         const MinRicciOptions& opt = {}) {
  if (points.empty()) throw InputError("cd_check needs at least one sample point");
  CDResult out;
  out.minimum = std::numeric_limits<double>::infinity();
  for (const auto& p : points) {
    AdaptedPoint A = adapt(W, p);
    MinRicciResult m = min_partial_ricci(W, A, q, side, opt);
    out.directions = m.directions;
    if (m.value < out.minimum) {
      out.minimum = m.value;
      out.witness_point = A.G.p;
      out.witness_direction = m.direction;
      out.witness_frame = m.frame;
    }
  }
  out.points = static_cast<int>(points.size());
  out.margin = out.minimum - c;
  out.holds = out.margin >= 0.0;
  return out;
}

inline std::vector<std::vector<double>> sample_points(const ChartedManifold& M, int count,
                                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < count; ++i) pts.push_back(M.sample_point(rng));
  return pts;
}

struct MixedScalar {
  double S_mix = 0.0;
  double trace_ric_top = 0.0;   ///< Σ_i Ric⊤(ℰ_i, ℰ_i)
  double trace_ric_bot = 0.0;   ///< Σ_a Ric⊥(E_a, E_a)
  double weighted = 0.0;        ///< S^{N,𝒩}_{mix,X}
  double weighted_traces = 0.0; ///< ½ tr(Ric^{⊥,N}_X + Ric^{⊤,𝒩}_X)
  double rank_weighted = 0.0;   ///< S_{mix,X} (N = n, 𝒩 = ν)
  double difference_closed_form = 0.0;     ///< closed-form right side of S^{N,𝒩} − S_{mix,X}
  double difference_definition = 0.0;  ///< the same difference implied by the definition
  double divX = 0.0, X_top2 = 0.0, X_bot2 = 0.0;
};

inline MixedScalar mixed_scalar(const WeightedAlmostProduct& W, const AdaptedPoint& A) {
  MixedScalar s;
  for (int a = 0; a < A.nu; ++a)
    for (int i = 0; i < A.n; ++i) s.S_mix += A.G.R(A.top(a), A.bot(i), A.bot(i), A.top(a));
  for (int i = 0; i < A.n; ++i)
    for (int a = 0; a < A.nu; ++a) s.trace_ric_top += A.G.R(A.bot(i), A.top(a), A.top(a), A.bot(i));
  for (int a = 0; a < A.nu; ++a)
    for (int i = 0; i < A.n; ++i) s.trace_ric_bot += A.G.R(A.top(a), A.bot(i), A.bot(i), A.top(a));
  s.divX = A.divX;
  s.X_top2 = A.norm2(A.tang(A.Xv));
  s.X_bot2 = A.norm2(A.perp(A.Xv));
  const double N = W.N(), calN = W.calN(), n = A.n, nu = A.nu;
  s.weighted = s.S_mix + 0.5 * s.divX + s.X_top2 / (2 * N) + s.X_bot2 / (2 * calN);
  s.rank_weighted = s.S_mix + 0.5 * s.divX + s.X_top2 / (2 * n) + s.X_bot2 / (2 * nu);
  double tr_top = 0.0, tr_bot = 0.0;
  for (int i = 0; i < A.n; ++i) tr_top += s.trace_ric_top / A.n + nu * weight_top(W, A, A.bot(i));
  for (int a = 0; a < A.nu; ++a) tr_bot += s.trace_ric_bot / A.nu + n * weight_bot(W, A, A.top(a));
  s.weighted_traces = 0.5 * (tr_top + tr_bot);
  s.difference_closed_form =
      (calN - nu) / (2 * nu * calN) * s.X_bot2 + (N - n) / (2 * n * N) * s.X_top2;
  s.difference_definition =
      (nu - calN) / (2 * nu * calN) * s.X_bot2 + (n - N) / (2 * n * N) * s.X_top2;
  return s;
}

/// R⊥_{X,x} = R⊥_x + (½𝓛_{X/n}g(x,x) + g(X/n,x)²) id on D⊥, in the ℰ frame.
inline Mat weighted_jacobi_operator(const AdaptedPoint& A, const Vec& x) {
  require_in(A, x, Side::Top, "x");
  Mat M(A.n, A.n);
  for (int i = 0; i < A.n; ++i)
    for (int j = 0; j < A.n; ++j) M(i, j) = A.G.R(A.bot(i), x, x, A.bot(j));
  const double n = A.n;
  double s = A.ip(A.Xv, x) / n;
  M = symmetrize(M);
  M.diagonal().array() += A.lie(x, x) / (2.0 * n) + s * s;
  return M;
}

/// Dual operator R⊤_{X,y} on D⊤ in the E frame.
inline Mat weighted_jacobi_operator_top(const AdaptedPoint& A, const Vec& y) {
  require_in(A, y, Side::Bot, "y");
  Mat M(A.nu, A.nu);
  for (int a = 0; a < A.nu; ++a)
    for (int b = 0; b < A.nu; ++b) M(a, b) = A.G.R(A.top(a), y, y, A.top(b));
  const double nu = A.nu;
  double s = A.ip(A.Xv, y) / nu;
  M = symmetrize(M);
  M.diagonal().array() += A.lie(y, y) / (2.0 * nu) + s * s;
  return M;
}

struct SpectrumBracket {
  double k1 = std::numeric_limits<double>::infinity();
  double k2 = -std::numeric_limits<double>::infinity();
  int samples = 0;
};

/// Extreme eigenvalues of R⊥_{X,x} over sampled unit x ∈ D⊤ at one point.
inline SpectrumBracket jacobi_spectrum(const AdaptedPoint& A, int directions = 0) {
  SpectrumBracket b;
  int count = directions > 0 ? directions : default_direction_count(A.nu);
  for (const auto& c : sphere_directions(A.nu, count)) {
    Vec x = A.top_basis() * c;
    Vec ev = sym_eigenvalues(weighted_jacobi_operator(A, x));
    b.k1 = std::min(b.k1, ev(0));
    b.k2 = std::max(b.k2, ev(ev.size() - 1));
    ++b.samples;
  }
  return b;
}

}  // namespace foliate
