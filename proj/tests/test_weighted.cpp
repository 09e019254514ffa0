#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "foliate/gallery.hpp"
#include "foliate/weighted.hpp"

namespace foliate {
namespace {

using std::numbers::pi;

Vec unit_in(const AdaptedPoint& A, Side side, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Vec v = Vec::Zero(A.d);
  if (side == Side::Top)
    for (int a = 0; a < A.nu; ++a) v += nd(rng) * A.top(a);
  else
    for (int i = 0; i < A.n; ++i) v += nd(rng) * A.bot(i);
  return v / std::sqrt(A.norm2(v));
}

TEST(Weighted, ZeroFieldReducesToUnweighted) {
  for (const auto& name : gallery_names()) {
    auto item = builtin(name);
    auto W = item.W.with_X(VectorFieldSpec::zero(item.W.dim()));
    std::mt19937_64 rng(1);
    for (const auto& p : sample_points(W.manifold(), 10, 2)) {
      AdaptedPoint A = adapt(W, p);
      Vec y = unit_in(A, Side::Bot, rng), x = unit_in(A, Side::Top, rng);
      EXPECT_NEAR(mixed_sectional_weighted(W, A, y, x), sectional(A.G, y, x), 1e-12) << name;
      PartialRicci r = partial_ricci_q(W, A, y, {x});
      EXPECT_NEAR(r.weighted, r.plain, 1e-12);
      MixedScalar s = mixed_scalar(W, A);
      EXPECT_NEAR(s.weighted, s.S_mix, 1e-12) << name;
    }
  }
}

TEST(Weighted, RejectsVectorsOutsideTheirDistribution) {
  auto item = hopf_s3();
  std::vector<double> p{0.6, 0.2, 0.4};
  AdaptedPoint A = adapt(item.W, p);
  EXPECT_THROW(mixed_sectional_weighted(item.W, A, A.top(0), A.bot(0)), InputError);
  EXPECT_THROW(mixed_sectional_weighted(item.W, A, 2.0 * A.bot(0), A.top(0)), InputError);
  EXPECT_THROW(partial_ricci_q(item.W, A, A.bot(0), {A.top(0), A.top(0)}), InputError);
}

// Killing field ε·ξ tangent to the Hopf fibres: 𝓛_X g = 0 and |X| = ε.
TEST(Weighted, HopfKillingWeightClosedForm) {
  const double eps = 0.2;
  auto item = weighted_hopf_s3({{"eps", "0.2"}});
  std::mt19937_64 rng(3);
  for (const auto& p : sample_points(item.W.manifold(), 20, 4)) {
    AdaptedPoint A = adapt(item.W, p);
    EXPECT_NEAR(A.lieX.norm(), 0.0, 1e-12);
    Vec y = unit_in(A, Side::Bot, rng);
    EXPECT_NEAR(weight_top(item.W, A, y), 0.0, 1e-14);
    EXPECT_NEAR(weight_bot(item.W, A, A.top(0)), eps * eps / 4.0, 1e-14);
    Mat R = weighted_jacobi_operator(A, A.top(0));
    EXPECT_NEAR((R - (1.0 + eps * eps / 4.0) * Mat::Identity(2, 2)).norm(), 0.0, 1e-10);
    EXPECT_NEAR(mixed_sectional_weighted_bot(item.W, A, A.top(0), y), 1.0 + eps * eps / 4.0, 1e-10);
  }
}

TEST(Weighted, RicciShiftMatchesDefinitionNotClosedForm) {
  auto base = twisted_leaf_torus();
  std::mt19937_64 rng(5);
  for (double calN : {-3.0, 0.5, 2.0, 7.0}) {
    auto W = base.W.with_dimensions(base.W.N(), calN);
    for (const auto& p : sample_points(W.manifold(), 10, 6)) {
      AdaptedPoint A = adapt(W, p);
      Vec y = unit_in(A, Side::Bot, rng);
      std::vector<Vec> frame{A.top(0), A.top(1)};
      for (int q : {1, 2}) {
        std::vector<Vec> Wq(frame.begin(), frame.begin() + q);
        PartialRicci r = partial_ricci_q(W, A, y, Wq);
        double shift = r.weighted - r.rank_weighted;
        EXPECT_NEAR(shift, ricci_shift_definition(q, A.nu, calN, r.g_X_y), 1e-12);
      }
    }
  }
  // the two forms agree only when 𝒩 = ν or g(X, y) = 0
  EXPECT_NEAR(ricci_shift_closed_form(1, 2, 2.0, 0.7), ricci_shift_definition(1, 2, 2.0, 0.7), 0.0);
  EXPECT_GT(std::fabs(ricci_shift_closed_form(1, 2, 5.0, 0.7) - ricci_shift_definition(1, 2, 5.0, 0.7)),
            0.1);
}

TEST(Weighted, MixedScalarTwoPathsAgree) {
  for (const char* name : {"twisted_leaf_torus", "helical_torus", "weighted_hopf_s3",
                           "conformal_torus"}) {
    Params prm;
    prm["N"] = "3.5";
    prm["calN"] = "-1.5";
    if (std::string(name) == "conformal_torus") prm["X"] = "sin(x1);0.2*cos(x0);x0*0+0.1";
    if (std::string(name) == "helical_torus") prm["X"] = "0.3;cos(x0);sin(x2)";
    auto item = builtin(name, prm);
    for (const auto& p : sample_points(item.W.manifold(), 10, 7)) {
      AdaptedPoint A = adapt(item.W, p);
      MixedScalar s = mixed_scalar(item.W, A);
      EXPECT_NEAR(s.weighted, s.weighted_traces, 1e-10) << name;
      EXPECT_NEAR(s.trace_ric_top, s.trace_ric_bot, 1e-10) << name;
      EXPECT_NEAR(s.weighted - s.rank_weighted, s.difference_definition, 1e-12) << name;
    }
  }
}

TEST(Weighted, SphereDirectionsAreUnitAndSpread) {
  for (int m : {2, 3, 4, 5}) {
    auto dirs = sphere_directions(m, default_direction_count(m));
    EXPECT_GE(static_cast<int>(dirs.size()), default_direction_count(m) - 2);
    Vec mean = Vec::Zero(m);
    for (const auto& v : dirs) {
      EXPECT_NEAR(v.norm(), 1.0, 1e-14);
      mean += v;
    }
    if (m >= 3) {
      EXPECT_LT(mean.norm() / dirs.size(), 0.05);
    }
  }
}

TEST(Weighted, KyFanIsMinimumOverRandomFrames) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    Mat S(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) S(i, j) = nd(rng);
    S = symmetrize(S);
    for (int q = 1; q <= 4; ++q) {
      double kf = ky_fan_min(S, q), best = 1e300;
      for (int k = 0; k < 2000; ++k) {
        Mat Z(4, q);
        for (int i = 0; i < 4; ++i)
          for (int j = 0; j < q; ++j) Z(i, j) = nd(rng);
        Eigen::HouseholderQR<Mat> qr(Z);
        Mat Q = qr.householderQ() * Mat::Identity(4, q);
        double t = (Q.transpose() * S * Q).trace();
        EXPECT_GE(t, kf - 1e-12);
        best = std::min(best, t);
      }
      if (q == 4) {
        EXPECT_NEAR(best, kf, 1e-10);
      }
    }
  }
}

// Brute force over a dense circle for the outer minimum (n = 2) with the
// inner minimum over a dense grid of orthonormal frames in D⊤ (ν = 2, q = 1).
TEST(Weighted, MinPartialRicciMatchesBruteForce) {
  auto item = doubly_twisted_torus({{"nu", "2"}, {"n", "2"}, {"X", "0.3*sin(x2);0.2;cos(x3);0.1*x0*0"},
                                    {"calN", "5"}});
  for (const auto& p : sample_points(item.W.manifold(), 3, 9)) {
    AdaptedPoint A = adapt(item.W, p);
    MinRicciResult r = min_partial_ricci(item.W, A, 1, Side::Top);
    double brute = 1e300;
    for (int i = 0; i < 720; ++i) {
      double t = pi * i / 720;
      Vec y = std::cos(t) * A.bot(0) + std::sin(t) * A.bot(1);
      for (int k = 0; k < 720; ++k) {
        double s = pi * k / 720;
        Vec x = std::cos(s) * A.top(0) + std::sin(s) * A.top(1);
        brute = std::min(brute, partial_ricci_q(item.W, A, y, {x}).weighted);
      }
    }
    EXPECT_LE(r.value, brute + 1e-9);
    EXPECT_NEAR(r.value, brute, 1e-4);
    PartialRicci at = partial_ricci_q(item.W, A, r.direction, r.frame);
    EXPECT_NEAR(at.weighted, r.value, 1e-9);
  }
}

TEST(Weighted, CurvatureDimensionOnHopf) {
  auto item = hopf_s3();
  auto pts = sample_points(item.W.manifold(), 8, 10);
  CDResult ok = cd_check(item.W, 1.0 - 1e-9, 1, Side::Top, pts);
  EXPECT_TRUE(ok.holds);
  EXPECT_NEAR(ok.minimum, 1.0, 1e-9);
  CDResult bad = cd_check(item.W, 1.01, 1, Side::Top, pts);
  EXPECT_FALSE(bad.holds);
  EXPECT_NEAR(bad.margin, -0.01, 1e-9);
  CDResult dual = cd_check(item.W, 2.0 - 1e-9, 2, Side::Bot, pts);
  EXPECT_TRUE(dual.holds);
  EXPECT_THROW(cd_check(item.W, 0.0, 2, Side::Top, pts), InputError);
}

TEST(Weighted, JacobiSpectrumOnSphere) {
  auto item = hopf_s3();
  std::vector<double> p{0.5, 1.0, 2.0};
  AdaptedPoint A = adapt(item.W, p);
  SpectrumBracket b = jacobi_spectrum(A);
  EXPECT_NEAR(b.k1, 1.0, 1e-10);
  EXPECT_NEAR(b.k2, 1.0, 1e-10);
}

}  // namespace
}  // namespace foliate
