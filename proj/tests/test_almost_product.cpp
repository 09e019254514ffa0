#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "foliate/almost_product.hpp"
#include "foliate/gallery.hpp"

namespace foliate {
namespace {

using std::numbers::pi;

std::vector<std::vector<double>> points_of(const ChartedManifold& M, int count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::vector<double>> out;
  for (int i = 0; i < count; ++i) out.push_back(M.sample_point(rng));
  return out;
}

TEST(Frame, CoordinateAlignedOnFlatTorus) {
  auto item = flat_torus({{"d", "4"}, {"nu", "2"}});
  for (const auto& p : points_of(item.W.manifold(), 10, 1)) {
    AdaptedPoint A = adapt(item.W, p);
    EXPECT_NEAR((A.E.cwiseAbs() - Mat::Identity(4, 4)).norm(), 0.0, 1e-14);
    for (const auto& m : A.nablaE) EXPECT_NEAR(m.norm(), 0.0, 1e-14);
  }
}

TEST(Frame, OrthonormalOnEveryGalleryItem) {
  for (const auto& name : gallery_names()) {
    auto item = builtin(name);
    for (const auto& p : points_of(item.W.manifold(), 50, 2)) {
      AdaptedPoint A = adapt(item.W, p);
      EXPECT_LT(orthonormality_residual(A.g(), A.E), 1e-10) << name;
      EXPECT_NEAR((A.Ptop + A.Pbot - Mat::Identity(A.d, A.d)).norm(), 0.0, 1e-10) << name;
      EXPECT_NEAR((A.Ptop * A.Ptop - A.Ptop).norm(), 0.0, 1e-10) << name;
    }
  }
}

TEST(Frame, ProjectorIndependentOfSpanningSet) {
  auto item = hopf_s3();
  DistributionSpec scaled;
  scaled.spanning.push_back(VectorFieldSpec::from_strings(
      {"0", "2*(1 + 0.3*sin(x1))", "2*(1 + 0.3*sin(x1))"}, 3, "scaled"));
  auto W2 = item.W.with_distribution(scaled);
  auto conf = conformal_torus();
  DistributionSpec mixed;
  mixed.spanning.push_back(VectorFieldSpec::from_strings({"1", "0", "0"}, 3));
  mixed.spanning.push_back(VectorFieldSpec::from_strings({"1", "cos(x2)", "0"}, 3));
  auto C2 = conf.W.with_distribution(mixed);
  DistributionSpec plain;
  plain.spanning.push_back(VectorFieldSpec::from_strings({"1", "0", "0"}, 3));
  plain.spanning.push_back(VectorFieldSpec::from_strings({"0", "1", "0"}, 3));
  auto C1 = conf.W.with_distribution(plain);
  for (const auto& p : points_of(item.W.manifold(), 30, 3)) {
    AdaptedPoint A = adapt(item.W, p), B = adapt(W2, p);
    EXPECT_NEAR((A.Ptop - B.Ptop).norm(), 0.0, 1e-9);
    ExtrinsicPack PA = extrinsic(A), PB = extrinsic(B);
    EXPECT_NEAR(PA.T_bot2, PB.T_bot2, 1e-9);
    EXPECT_NEAR((PA.Hbot - PB.Hbot).norm(), 0.0, 1e-9);
  }
  for (const auto& p : points_of(conf.W.manifold(), 30, 4)) {
    if (std::fabs(std::cos(p[2])) < 0.1) continue;
    AdaptedPoint A = adapt(C1, p), B = adapt(C2, p);
    EXPECT_NEAR((A.Ptop - B.Ptop).norm(), 0.0, 1e-9);
    ExtrinsicPack PA = extrinsic(A), PB = extrinsic(B);
    EXPECT_NEAR(PA.h_top2, PB.h_top2, 1e-9);
    EXPECT_NEAR((PA.Htop - PB.Htop).norm(), 0.0, 1e-9);
  }
}

TEST(Frame, DegenerateSpanIsRejected) {
  auto item = flat_torus();
  DistributionSpec bad;
  bad.spanning.push_back(VectorFieldSpec::from_strings({"1", "0", "0"}, 3));
  bad.spanning.push_back(VectorFieldSpec::from_strings({"2", "0", "0"}, 3));
  auto W = item.W.with_distribution(bad);
  std::vector<double> p{0.1, 0.2, 0.3};
  EXPECT_THROW(adapt(W, p), NumericalError);
}

TEST(Extrinsic, ProductTorusHasNoExtrinsicGeometry) {
  auto item = flat_torus({{"d", "5"}, {"nu", "2"}});
  for (const auto& p : points_of(item.W.manifold(), 10, 5)) {
    ExtrinsicPack P = extrinsic(adapt(item.W, p));
    EXPECT_NEAR(P.h_top2 + P.h_bot2 + P.T_top2 + P.T_bot2 + P.H_top2 + P.H_bot2, 0.0, 1e-24);
  }
}

// Oracle for the doubly-twisted product: with g = v² g_B ⊕ u² g_F,
// h⊤ = −g⊤ ⊗ ∇⊥ log v and h⊥ = −g⊥ ⊗ ∇⊤ log u, both integrable.
TEST(Extrinsic, DoublyTwistedMatchesWarpingGradients) {
  for (auto params : {Params{}, Params{{"nu", "2"}, {"n", "2"}}}) {
    auto item = doubly_twisted_torus(params);
    const auto& [u, v] = *item.twisted_uv;
    const int nu = item.W.nu(), n = item.W.n(), d = nu + n;
    for (const auto& p : points_of(item.W.manifold(), 40, 6)) {
      AdaptedPoint A = adapt(item.W, p);
      ExtrinsicPack P = extrinsic(A);
      Jet2 ju = u.eval_jet(p), jv = v.eval_jet(p);
      Vec grad_perp_logv = Vec::Zero(d), grad_top_logu = Vec::Zero(d);
      for (int k = nu; k < d; ++k) grad_perp_logv(k) = jv.grad(k) / jv.v / (ju.v * ju.v);
      for (int k = 0; k < nu; ++k) grad_top_logu(k) = ju.grad(k) / ju.v / (jv.v * jv.v);
      EXPECT_NEAR((P.Htop + nu * grad_perp_logv).norm(), 0.0, 1e-8);
      EXPECT_NEAR((P.Hbot + n * grad_top_logu).norm(), 0.0, 1e-8);
      for (int a = 0; a < nu; ++a)
        for (int b = 0; b < nu; ++b) {
          Vec expect = -(a == b ? 1.0 : 0.0) * grad_perp_logv;
          EXPECT_NEAR((P.htop[a][b] - expect).norm(), 0.0, 1e-8);
        }
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          Vec expect = -(i == j ? 1.0 : 0.0) * grad_top_logu;
          EXPECT_NEAR((P.hbot[i][j] - expect).norm(), 0.0, 1e-8);
        }
      EXPECT_NEAR(P.T_top2 + P.T_bot2, 0.0, 1e-20);
    }
  }
}

TEST(Extrinsic, ConformalTorusIsUmbilical) {
  auto item = conformal_torus();
  for (const auto& p : points_of(item.W.manifold(), 20, 7)) {
    ExtrinsicPack P = extrinsic(adapt(item.W, p));
    EXPECT_NEAR(P.h_top2, P.H_top2 / P.nu, 1e-10);
    EXPECT_NEAR(P.h_bot2, P.H_bot2 / P.n, 1e-10);
  }
}

TEST(Extrinsic, HopfFibresAreGeodesicWithTwistingComplement) {
  auto item = hopf_s3();
  for (const auto& p : points_of(item.W.manifold(), 40, 8)) {
    ExtrinsicPack P = extrinsic(adapt(item.W, p));
    EXPECT_NEAR(P.h_top2, 0.0, 1e-20);
    EXPECT_NEAR(P.h_bot2, 0.0, 1e-20);
    EXPECT_NEAR(P.T_bot2, 2.0, 1e-10);
    EXPECT_NEAR(P.T_top2, 0.0, 1e-20);
  }
}

TEST(Extrinsic, HelicalTorusHasTwistOnBothSides) {
  auto item = helical_torus();
  double tb = 0.0;
  for (const auto& p : points_of(item.W.manifold(), 20, 9)) {
    ExtrinsicPack P = extrinsic(adapt(item.W, p));
    tb = std::max(tb, P.T_bot2);
    EXPECT_NEAR(P.T_top2, 0.0, 1e-20);  // line fields are integrable
  }
  EXPECT_GT(tb, 1e-3);
}

TEST(Extrinsic, WeightedNormsSplit) {
  auto item = twisted_leaf_torus();
  for (const auto& p : points_of(item.W.manifold(), 20, 10)) {
    AdaptedPoint A = adapt(item.W, p);
    ExtrinsicPack P = extrinsic(A);
    EXPECT_NEAR(P.X_top2 + P.X_bot2, A.norm2(A.Xv), 1e-12);
  }
}

TEST(Operators, WeingartenSelfAdjointWithMeanCurvatureTrace) {
  for (const char* name : {"conformal_torus", "helical_torus", "doubly_twisted_torus"}) {
    auto item = builtin(name);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    for (const auto& p : points_of(item.W.manifold(), 20, 12)) {
      AdaptedPoint A = adapt(item.W, p);
      ExtrinsicPack P = extrinsic(A);
      Vec Z = Vec::Zero(A.d), w = Vec::Zero(A.d);
      for (int i = 0; i < A.n; ++i) Z += nd(rng) * A.bot(i);
      for (int a = 0; a < A.nu; ++a) w += nd(rng) * A.top(a);
      Mat W1 = weingarten(A, P, Side::Top, Z);
      EXPECT_NEAR((W1 - W1.transpose()).norm(), 0.0, 1e-12) << name;
      EXPECT_NEAR(W1.trace(), A.ip(P.Htop, Z), 1e-10) << name;
      Mat W2 = weingarten(A, P, Side::Bot, w);
      EXPECT_NEAR(W2.trace(), A.ip(P.Hbot, w), 1e-10) << name;
      Mat T2 = T_sharp(A, P, Side::Bot, w);
      EXPECT_NEAR((T2 + T2.transpose()).norm(), 0.0, 1e-12) << name;
      EXPECT_THROW(weingarten(A, P, Side::Top, w), InputError);
    }
  }
}

// ∇ of a field from finite differences of its coordinate components.
Vec covariant_fd(const ChartedManifold& M, const std::function<Vec(std::span<const double>)>& f,
                 const PointGeometry& G, const Vec& y) {
  Mat J = field_jacobian_fd(M, f, G.p);
  return G.covariant(y, f(G.p), J);
}

TEST(CoNullity, ProductTorusIsZero) {
  auto item = flat_torus();
  std::vector<double> p{0.4, 1.0, 2.0};
  AdaptedPoint A = adapt(item.W, p);
  CoNullity C = co_nullity(A, extrinsic(A), A.top(0));
  EXPECT_NEAR(C.B.norm(), 0.0, 1e-14);
  EXPECT_TRUE(C.totally_geodesic);
}

TEST(CoNullity, HopfIsAntisymmetricRotation) {
  auto item = hopf_s3();
  for (const auto& p : points_of(item.W.manifold(), 20, 13)) {
    AdaptedPoint A = adapt(item.W, p);
    CoNullity C = co_nullity(A, extrinsic(A), A.top(0));
    EXPECT_NEAR((C.B + C.B.transpose()).norm(), 0.0, 1e-10);
    EXPECT_NEAR(std::fabs(C.B(0, 1)), 1.0, 1e-10);
  }
}

// B_x(y) = (∇_y x̃)⊥ for any extension x̃ of x; compare against FD of two
// different extensions, f·E_0 with f(p) = 1 and the frame field itself.
TEST(CoNullity, TensorialAndMatchesFiniteDifferences) {
  for (const char* name : {"hopf_s3", "helical_torus", "doubly_twisted_torus"}) {
    auto item = builtin(name);
    const auto& M = item.W.manifold();
    for (const auto& p : points_of(M, 10, 14)) {
      AdaptedPoint A = adapt(item.W, p);
      CoNullity C = co_nullity(A, extrinsic(A), A.top(0));
      auto frame0 = [&](std::span<const double> q) { return Vec(adapt(item.W, q).top(0)); };
      auto scaled = [&](std::span<const double> q) {
        double f = 1.0 + 0.5 * (std::sin(q[0]) - std::sin(p[0])) + 0.3 * (q[1] - p[1]);
        return Vec(f * adapt(item.W, q).top(0));
      };
      for (int i = 0; i < A.n; ++i) {
        Vec y = A.bot(i);
        Vec d1 = A.perp(covariant_fd(M, frame0, A.G, y));
        Vec d2 = A.perp(covariant_fd(M, scaled, A.G, y));
        for (int j = 0; j < A.n; ++j) {
          EXPECT_NEAR(C.B(j, i), A.ip(d1, A.bot(j)), 1e-8) << name;
          EXPECT_NEAR(C.B(j, i), A.ip(d2, A.bot(j)), 1e-8) << name;
        }
      }
    }
  }
}

TEST(CoNullity, WeightShiftsByProjectedField) {
  auto item = weighted_hopf_s3();
  std::vector<double> p{0.7, 0.3, 1.1};
  AdaptedPoint A = adapt(item.W, p);
  CoNullity C = co_nullity(A, extrinsic(A), A.top(0));
  double s = A.ip(A.Xv, A.top(0)) / 2.0;
  EXPECT_NEAR(std::fabs(s), 0.1, 1e-12);  // |X| = eps on the unit sphere
  EXPECT_NEAR((C.BX - C.B + s * Mat::Identity(2, 2)).norm(), 0.0, 1e-14);
}

}  // namespace
}  // namespace foliate
