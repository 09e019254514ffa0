#pragma once

/// \file bounds.hpp
/// Radon–Hurwitz arithmetic, the leaf diameter bound, the constants of the
/// positive-curvature leaf-dimension theorems, and the blow-up scenario for
/// constant weighted Jacobi operators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "foliate/errors.hpp"
#include "foliate/geodesic.hpp"
#include "foliate/weighted.hpp"

namespace foliate {

/// ρ(n) for n = odd·2^(4b+c), 0 ≤ c ≤ 3: 8b + 2^c.
inline int radon_hurwitz(std::int64_t n) {
  if (n < 1) throw InputError("radon_hurwitz needs n >= 1");
  int m = 0;
  while (n % 2 == 0) {
    n /= 2;
    ++m;
  }
  return 8 * (m / 4) + (1 << (m % 4));
}

struct RhoBoundCheck {
  bool holds = true;  ///< ρ(n) ≤ 2 log₂ n + 2 for every checked n
  std::optional<std::int64_t> first_failure;
  /// Smallest n₀ with 2 log₂ n + 2 ≤ n for all n₀ ≤ n ≤ n_max (the second
  /// link fails for 2 ≤ n ≤ 7).
  std::int64_t upper_from = 0;
  std::int64_t checked = 0;
};

/// Checks ρ(n) ≤ 2 log₂ n + 2 ≤ n for 2 ≤ n ≤ n_max.
inline RhoBoundCheck rho_bound_check(std::int64_t n_max) {
  if (n_max < 2) throw InputError("rho_bound_check needs n_max >= 2");
  RhoBoundCheck r;
  r.upper_from = n_max + 1;
  for (std::int64_t n = n_max; n >= 2; --n) {
    const double mid = 2.0 * std::log2(static_cast<double>(n)) + 2.0;
    ++r.checked;
    if (!(radon_hurwitz(n) <= mid)) {
      r.holds = false;
      r.first_failure = n;
    }
    if (mid <= static_cast<double>(n) && r.upper_from == n + 1) r.upper_from = n;
  }
  return r;
}

/// ν(n) = max{t : t < ρ(n − t)} over 1 ≤ t ≤ n − 1; 0 when empty.
inline int nullity_threshold(int n) {
  if (n < 2) throw InputError("nullity_threshold needs n >= 2");
  int best = 0;
  for (int t = 1; t <= n - 1; ++t)
    if (t < radon_hurwitz(n - t)) best = t;
  return best;
}

// ---------------------------------------------------------------------------
// diameter bound

struct DiameterBoundInput {
  double c = 1.0;
  int q = 1;
  int n = 1, nu = 1;
  double X_bot = 0.0;  ///< ‖X⊥‖
  double h_F = 0.0;    ///< ‖h_F‖
};

struct DiameterBound {
  int branch = 1;
  double diam2 = 0.0;
  double diam = 0.0;
};

/// Three-branch bound on (diam F)² as displayed: the first branch's π²/4
/// carries no 1/c factor, the second's does.
inline DiameterBound diameter_bound(const DiameterBoundInput& in) {
  if (!(in.c > 0.0)) throw InputError("c must be positive");
  if (in.n < 1 || in.nu < 1) throw InputError("n and nu must be positive");
  if (in.q < 1 || in.q > in.nu) throw InputError("q must lie in 1..nu");
  if (in.X_bot < 0.0 || in.h_F < 0.0) throw InputError("norms must be nonnegative");
  const double q = in.q, x = in.X_bot;
  if (!(in.c + q * x * x > 0.0)) throw InputError("c + q|X_perp|^2 must be positive");
  DiameterBound b;
  b.diam2 = 2.0 * q * x / (in.c + q * x * x) + 2.0 * q / in.c * in.h_F;
  const double quarter = std::numbers::pi * std::numbers::pi / 4.0;
  if (in.nu <= in.n - 1) {
    b.branch = 1;
    b.diam2 += quarter;
  } else if (in.nu < in.n + in.q - 1) {
    b.branch = 2;
    b.diam2 += (in.q - in.nu + in.n - 1) * quarter / in.c;
  } else {
    b.branch = 3;
  }
  b.diam = std::sqrt(b.diam2);
  return b;
}

// ---------------------------------------------------------------------------
// leaf-dimension theorem constants

enum class PinchingVariant { Local, Decomposition };

inline double pinching_constant(PinchingVariant v) { return v == PinchingVariant::Local ? 0.3 : 0.337; }

struct Thm418Params {
  double k1 = 1.0, k2 = 1.0;
  double eps = 0.0;
  double a = 0.0;  ///< a(L)
  double k() const { return 0.5 * (k1 + k2); }
  double delta() const { return (k1 - eps) / (k2 + eps); }
};

struct PinchingCheck {
  double lhs = 0.0, rhs = 0.0, delta = 0.0, k = 0.0, constant = 0.0;
  bool holds = false;
};

/// (k₂ − k₁ + 2ε) max{a(L)², k} ≤ C k (k₂ + ε) with C = 0.3 or 0.337.
inline PinchingCheck thm418_hypothesis(const Thm418Params& p, PinchingVariant v) {
  if (v == PinchingVariant::Local && !(p.k1 > 0.0)) throw InputError("k1 must be positive");
  if (!(p.k1 >= 0.0 && p.k1 <= p.k2)) throw InputError("need 0 <= k1 <= k2");
  if (p.eps < 0.0) throw InputError("eps must be nonnegative");
  if (!(p.eps < p.k1)) throw InputError("eps must be smaller than k1");
  if (p.a < 0.0) throw InputError("a(L) must be nonnegative");
  PinchingCheck c;
  c.k = p.k();
  c.delta = p.delta();
  c.constant = pinching_constant(v);
  c.lhs = (p.k2 - p.k1 + 2.0 * p.eps) * std::max(p.a * p.a, c.k);
  c.rhs = c.constant * c.k * (p.k2 + p.eps);
  c.holds = c.lhs <= c.rhs;
  return c;
}

struct PinchingScanRow {
  double k1 = 0.0, delta = 0.0, lhs = 0.0, rhs = 0.0;
  bool holds = false;
};

/// Scans k₁ over (eps, k₂] with k₂, ε, a(L) fixed; the feasible region is
/// the set of rows that hold.
inline std::vector<PinchingScanRow> pinching_scan(double k2, double eps, double a, PinchingVariant v,
                                              int steps = 1000) {
  if (steps < 1) throw InputError("scan needs at least one step");
  std::vector<PinchingScanRow> rows;
  for (int i = 1; i <= steps; ++i) {
    Thm418Params p;
    p.k2 = k2;
    p.eps = eps;
    p.a = a;
    p.k1 = eps + (k2 - eps) * i / steps;
    if (!(p.k1 > eps)) continue;
    PinchingCheck c = thm418_hypothesis(p, v);
    rows.push_back({p.k1, c.delta, c.lhs, c.rhs, c.holds});
  }
  return rows;
}

/// f(δ) = ((3δ − 1)/(1 + δ))² √(2δ(1 + δ)).
inline double f_delta(double delta) {
  if (!(delta > 1.0 / 3.0)) throw InputError("f(delta) needs delta > 1/3");
  const double r = (3.0 * delta - 1.0) / (1.0 + delta);
  return r * r * std::sqrt(2.0 * delta * (1.0 + delta));
}

struct ScalarInequality {
  double lhs = 0.0, rhs = 0.0;
  bool holds = false;
};

/// 0.3(π/2 + τ)((1 + δ)/(3δ − 1))² < √(2δ(1 + δ)).
inline ScalarInequality sufficient_inequality(double tau, double delta) {
  if (!(delta > 1.0 / 3.0)) throw InputError("delta must exceed 1/3");
  const double r = (1.0 + delta) / (3.0 * delta - 1.0);
  ScalarInequality s;
  s.lhs = 0.3 * (std::numbers::pi / 2 + tau) * r * r;
  s.rhs = std::sqrt(2.0 * delta * (1.0 + delta));
  s.holds = s.lhs < s.rhs;
  return s;
}

/// (π/2 + τ)(1 − δ)((1 + δ)/(3δ − 1))² max{a(L)²/k, 1} ≥ √(2δ(1 + δ)).
inline ScalarInequality necessary_inequality(double tau, double delta, double a2_over_k) {
  if (!(delta > 1.0 / 3.0)) throw InputError("delta must exceed 1/3");
  if (a2_over_k < 0.0) throw InputError("a(L)^2/k must be nonnegative");
  const double r = (1.0 + delta) / (3.0 * delta - 1.0);
  ScalarInequality s;
  s.lhs = (std::numbers::pi / 2 + tau) * (1.0 - delta) * r * r * std::max(a2_over_k, 1.0);
  s.rhs = std::sqrt(2.0 * delta * (1.0 + delta));
  s.holds = s.lhs >= s.rhs;
  return s;
}

/// 2 sin τ / (π/4 + (π/2 − τ) cos τ / 2 + 4 sin τ): the largest 1 − δ for
/// which |y| has a local minimum by time (π/2 + τ)/√k.
inline double local_minimum_ratio(double tau) {
  const double S = std::sin(tau), C = std::cos(tau);
  return 2.0 * S / (std::numbers::pi / 4 + 0.5 * (std::numbers::pi / 2 - tau) * C + 4.0 * S);
}

// ---------------------------------------------------------------------------
// extrinsic qth Ricci curvature

/// Σᵢ [g(h(x₀,x₀), h(xᵢ,xᵢ)) − |h(x₀,xᵢ)|²] for h given by its components
/// h[α](i, j) in orthonormal tangent and normal frames.
inline double extrinsic_q_ricci(const std::vector<Mat>& h, const Vec& x0, const std::vector<Vec>& xs) {
  if (h.empty()) throw InputError("h needs at least one normal component");
  const Eigen::Index m = h[0].rows();
  for (const auto& ha : h)
    if (ha.rows() != m || ha.cols() != m) throw InputError("h components must be square of equal size");
  if (x0.size() != m) throw InputError("x0 has the wrong dimension");
  if (xs.empty() || static_cast<Eigen::Index>(xs.size()) >= m + 1)
    throw InputError("q must lie in 1..dim-1");
  std::vector<Vec> all{x0};
  for (const auto& x : xs) {
    if (x.size() != m) throw InputError("x_i has the wrong dimension");
    all.push_back(x);
  }
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = 0; j < all.size(); ++j)
      if (std::fabs(all[i].dot(all[j]) - (i == j ? 1.0 : 0.0)) > 1e-10)
        throw InputError("x0, x1..xq must be orthonormal");
  auto hv = [&](const Vec& u, const Vec& v) {
    Vec r(static_cast<Eigen::Index>(h.size()));
    for (std::size_t a = 0; a < h.size(); ++a) r(static_cast<Eigen::Index>(a)) = u.dot(h[a] * v);
    return r;
  };
  double s = 0.0;
  const Vec h00 = hv(x0, x0);
  for (const auto& x : xs) {
    Vec h0i = hv(x0, x);
    s += h00.dot(hv(x, x)) - h0i.squaredNorm();
  }
  return s;
}

// ---------------------------------------------------------------------------
// blow-up scenario for constant weighted Jacobi operators

inline constexpr double kScenarioDeviation = 1e-3;

struct BlowUpBranch {
  Vec direction;       ///< unit x ∈ D⊤ at m
  std::string kind;    ///< "eigen" (B^X eigenvalue) or "scalar" (B₀ = λ₀ id)
  double lambda0 = 0.0;
  std::optional<double> blow_up;
  std::optional<double> closed_form;  ///< (π/2 + arctan(λ₀/√k))/√k when g(X, γ̇) ≡ 0
  bool before_T = false;
};

struct BlowUpReport {
  double k = 0.0, T = 0.0;
  double max_deviation = 0.0;  ///< max ‖R⊥_{X,γ̇} − k id‖ along the sampled geodesics
  double max_s2 = 0.0;         ///< max g(X/n, γ̇)²
  bool ex1_holds = true;       ///< g(X/n, γ̇)² ≤ k
  bool flagged = false;        ///< deviation beyond kScenarioDeviation
  std::vector<BlowUpBranch> branches;
  bool all_blow_up = true;
  int nu = 0, n = 0, rho_n = 0;
  bool nu_below_rho = false;
};

/// Along leaf geodesics from m with initial directions sampled in D⊤:
/// measures how far R⊥_{X,γ̇} is from k id, checks g(X/n, γ̇)² ≤ k, and runs
/// the weighted Riccati flow from every real eigenvalue λ₀ ≤ 0 of B^X and
/// from B₀ = λ₀ id for the given λ₀ ≤ 0, recording blow-up before π/√k.
inline BlowUpReport ferus_scenario(const WeightedAlmostProduct& W, std::span<const double> m, double k,
                                  const std::vector<double>& lambdas, int directions = 4,
                                  const FlowOptions& opt = {}, int checkpoints = 64) {
  if (!(k > 0.0)) throw InputError("the scenario needs k > 0");
  for (double l : lambdas)
    if (l > 0.0) throw InputError("initial eigenvalues must be nonpositive");
  AdaptedPoint A0 = adapt(W, m);
  ExtrinsicPack P0 = extrinsic(A0);
  if (std::sqrt(P0.h_top2) > kTotallyGeodesicTolerance)
    throw HypothesisError("D-top is not totally geodesic at m");
  BlowUpReport rep;
  rep.k = k;
  rep.T = std::numbers::pi / std::sqrt(k);
  rep.nu = A0.nu;
  rep.n = A0.n;
  rep.rho_n = radon_hurwitz(A0.n);
  rep.nu_below_rho = rep.nu < rep.rho_n;
  std::vector<Vec> dirs;
  if (A0.nu == 1) {
    dirs.push_back(Vec::Ones(1));
  } else {
    for (const auto& c : sphere_directions(A0.nu, std::max(directions, 1))) {
      dirs.push_back(c);
      if (static_cast<int>(dirs.size()) == directions) break;
    }
  }
  const double sk = std::sqrt(k);
  for (const auto& c : dirs) {
    Vec x = A0.top_basis() * c;
    LeafGeodesicTrace g = integrate_geodesic(W, m, x, rep.T);
    const std::size_t K = g.points.size();
    const std::size_t stride = std::max<std::size_t>(1, K / static_cast<std::size_t>(checkpoints));
    bool no_weight_along = true;
    for (std::size_t i = 0; i < K; i += stride) {
      AdaptedPoint A = adapt(W, std::span<const double>(g.points[i].data(), g.points[i].size()));
      Vec v = A.tang(g.velocities[i]);
      v /= std::sqrt(A.norm2(v));
      Mat R = weighted_jacobi_operator(A, v);
      rep.max_deviation = std::max(rep.max_deviation, (R - k * Mat::Identity(A.n, A.n)).norm());
      double s = A.ip(A.Xv, v) / A.n;
      rep.max_s2 = std::max(rep.max_s2, s * s);
      if (std::fabs(s) > 1e-12) no_weight_along = false;
    }
    auto run = [&](const std::string& kind, double l0, const Mat& B0) {
      BlowUpBranch b;
      b.direction = x;
      b.kind = kind;
      b.lambda0 = l0;
      RiccatiTrace tr = riccati_flow(W, m, x, rep.T, B0, true, opt);
      b.blow_up = tr.blow_up;
      b.before_T = tr.blow_up && *tr.blow_up < rep.T;
      if (no_weight_along) b.closed_form = (std::numbers::pi / 2 + std::atan(l0 / sk)) / sk;
      rep.all_blow_up = rep.all_blow_up && b.before_T;
      rep.branches.push_back(b);
    };
    CoNullity C = co_nullity(A0, P0, x);
    Eigen::EigenSolver<Mat> es(C.BX);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      auto ev = es.eigenvalues()(i);
      if (std::fabs(ev.imag()) < 1e-10 && ev.real() <= 0.0) run("eigen", ev.real(), C.BX);
    }
    for (double l0 : lambdas) run("scalar", l0, l0 * Mat::Identity(A0.n, A0.n));
  }
  rep.ex1_holds = rep.max_s2 <= k;
  rep.flagged = rep.max_deviation > kScenarioDeviation || !rep.ex1_holds;
  return rep;
}

}  // namespace foliate
