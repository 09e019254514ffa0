#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "foliate/gallery.hpp"
#include "foliate/identity.hpp"

namespace foliate {
namespace {

using std::numbers::pi;

constexpr char kConformalPhi[] = "0.3*sin(x0)*cos(x1) + 0.2*sin(x2 + x0)";

// X = ∇f for f = 0.5 sin(x0 + x1) + 0.3 cos(x2) on the conformal torus:
// X^i = exp(−2φ) ∂_i f.
std::string conformal_gradient_field() {
  std::string s = "exp(-2*(" + std::string(kConformalPhi) + "))";
  return s + "*0.5*cos(x0 + x1);" + s + "*0.5*cos(x0 + x1);" + s + "*(-0.3)*sin(x2)";
}

TEST(Pointwise, ProductMetricCoordinateFieldIsExact) {
  auto item = flat_torus();
  auto xi = VectorFieldSpec::from_strings({"1", "0", "0"}, 3);
  for (const auto& p : sample_points(item.W.manifold(), 10, 1)) {
    PointwiseResiduals r = pointwise_residuals(item.W, xi, p);
    EXPECT_LE(r.max(), 1e-10);
  }
}

TEST(Pointwise, EveryGalleryItemAt200Points) {
  for (const auto& name : gallery_names()) {
    auto item = builtin(name);
    std::mt19937_64 rng(11);
    auto xi = random_trig_field(item.W.dim(), rng);
    auto pts = sample_points(item.W.manifold(), 200, 12);
    for (const auto& rep : pointwise_suite(item.W, xi, pts)) {
      EXPECT_EQ(rep.samples, 200);
      EXPECT_TRUE(rep.pass) << name << " " << rep.id << " max " << rep.max;
      EXPECT_LE(rep.max, 1e-6) << name << " " << rep.id;
      EXPECT_EQ(rep.worst_point.size(), static_cast<std::size_t>(item.W.dim()));
    }
  }
}

TEST(Pointwise, SingleChecksAgreeWithSuite) {
  for (const char* name : {"doubly_twisted_torus", "hopf_s3"}) {
    auto item = builtin(name);
    std::mt19937_64 rng(13);
    auto xi = random_trig_field(item.W.dim(), rng);
    for (const auto& p : sample_points(item.W.manifold(), 20, 14)) {
      PointwiseResiduals all = pointwise_residuals(item.W, xi, p);
      EXPECT_DOUBLE_EQ(check_pw_identity(item.W, p), all.pw_if);
      EXPECT_DOUBLE_EQ(check_div_if2(item.W, p), all.div_if2);
      EXPECT_LT(std::fabs(all.pw_if), 1e-6) << name;
      EXPECT_LT(std::fabs(all.div_if2), 1e-6) << name;
      DivDDResidual dd = check_div_dd(item.W, xi, p);
      EXPECT_LT(std::fabs(dd.top), 1e-7) << name;
      EXPECT_LT(std::fabs(dd.bot), 1e-7) << name;
    }
  }
}

TEST(Pointwise, WeightFieldAsDivergenceField) {
  auto item = twisted_leaf_torus();
  for (const auto& p : sample_points(item.W.manifold(), 20, 15)) {
    DivDDResidual dd = check_div_dd(item.W, item.W.X(), p);
    EXPECT_LT(std::fabs(dd.top), 1e-7);
    EXPECT_LT(std::fabs(dd.bot), 1e-7);
  }
}

// Oracle: a wrong right-hand side is detected. Dropping ‖h⊤‖² from the
// algebraic side leaves a residual of exactly that size.
TEST(Pointwise, ResidualIsSensitiveToMissingTerm) {
  auto item = conformal_torus();
  std::vector<double> p{0.4, 1.3, 2.2};
  AdaptedPoint A = adapt(item.W, p);
  ExtrinsicPack P = extrinsic(A);
  ASSERT_GT(P.h_top2, 1e-3);
  MeanCurvatureDivergences D = mean_curvature_divergences(item.W, A);
  double wrong = pw_identity_rhs(P, mixed_scalar(item.W, A).S_mix) - P.h_top2;
  EXPECT_NEAR(D.top.full + D.bot.full - wrong, P.h_top2, 1e-8);
}

TEST(Pointwise, ReportStatistics) {
  std::vector<std::vector<double>> pts{{0.0}, {1.0}, {2.0}};
  ResidualReport r = residual_report("t", pts, 1.5, [](std::span<const double> p) { return -p[0]; });
  EXPECT_DOUBLE_EQ(r.max, 2.0);
  EXPECT_DOUBLE_EQ(r.mean, 1.0);
  EXPECT_EQ(r.worst_point, std::vector<double>{2.0});
  EXPECT_FALSE(r.pass);
}

TEST(Quadrature, UnitTorusArea) {
  ChartedManifold M("unit", {Coordinate::periodic(1.0), Coordinate::periodic(1.0)}, {{"1", "0"}, {"0", "1"}});
  EXPECT_NEAR(quadrature_integral(M, [](std::span<const double>) { return 1.0; }), 1.0, 1e-14);
}

TEST(Quadrature, SineCancels) {
  ChartedManifold M("circle", {Coordinate::periodic(2 * pi)}, {{"1"}});
  EXPECT_NEAR(quadrature_integral(M, [](std::span<const double> p) { return std::sin(p[0]); }), 0.0, 1e-12);
}

TEST(Quadrature, PeriodicRuleIsSpectral) {
  // ∫_0^{2π} exp(cos x) dx = 2π I_0(1)
  ChartedManifold M("circle", {Coordinate::periodic(2 * pi)}, {{"1"}});
  QuadratureOptions o;
  o.nodes = 24;
  double v = quadrature_integral(M, [](std::span<const double> p) { return std::exp(std::cos(p[0])); }, o);
  EXPECT_NEAR(v, 2 * pi * std::cyl_bessel_i(0.0, 1.0), 1e-13);
}

TEST(Quadrature, RejectsOpenChartsUnlessEndsCollapse) {
  auto item = hopf_s3();
  auto one = [](std::span<const double>) { return 1.0; };
  EXPECT_THROW(quadrature_integral(item.W.manifold(), one), InputError);
  QuadratureOptions o;
  o.collapsing_ends = true;
  // volume of the unit 3-sphere
  EXPECT_NEAR(quadrature_integral(item.W.manifold(), one, o), 2 * pi * pi, 1e-12);
}

TEST(Quadrature, GaussLegendreIntegratesPolynomials) {
  auto [x, w] = gauss_legendre(6);
  for (int k = 0; k <= 11; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], k);
    double exact = k % 2 ? 0.0 : 2.0 / (k + 1);
    EXPECT_NEAR(s, exact, 1e-14) << k;
  }
}

TEST(Quadrature, PairwiseSumIsOrderStable) {
  std::vector<double> v(1000);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / (1.0 + i);
  double ref = 0.0;
  for (double x : v) ref += x;
  EXPECT_NEAR(pairwise_sum(v), ref, 1e-13);
}

TEST(Quadrature, DivergenceTheoremOnClosedGalleryItems) {
  for (const auto& name : gallery_names()) {
    auto item = builtin(name);
    const auto& M = item.W.manifold();
    QuadratureOptions o;
    o.nodes = 24;
    o.collapsing_ends = !M.closed();
    std::mt19937_64 rng(21);
    for (int k = 0; k < 20; ++k) {
      auto xi = random_trig_field(M.dim(), rng);
      EXPECT_LE(std::fabs(divergence_integral(M, xi, o)), 1e-8) << name << " field " << k;
    }
  }
}

TEST(IntegralFormula1, ProductTorusVanishes) {
  auto item = flat_torus();
  QuadratureOptions o;
  o.nodes = 8;
  IntegralReport r = integral_formula_1(item.W, o);
  EXPECT_NEAR(r.value, 0.0, 1e-10);
  EXPECT_TRUE(r.pass);
}

TEST(IntegralFormula1, ConformalTorusGradientWeight) {
  auto item = conformal_torus({{"X", conformal_gradient_field()}});
  QuadratureOptions o;
  o.nodes = 16;
  IntegralReport r = integral_formula_1(item.W, o, 32);
  ASSERT_EQ(r.history.size(), 2u);
  EXPECT_GT(r.magnitude, 1.0);
  EXPECT_LE(std::fabs(r.value), 1e-6);
  EXPECT_LE(std::fabs(r.history[1].second), std::fabs(r.history[0].second) + 1e-13 * r.magnitude);
}

TEST(IntegralFormula1, DoublyTwistedWithWeight) {
  auto item = doubly_twisted_torus({{"nu", "2"}, {"n", "1"}, {"X", "0.3*sin(x1);0.2*cos(x2);0.1 + 0.2*sin(x0)"},
                                    {"N", "-2"}, {"calN", "3"}});
  QuadratureOptions o;
  o.nodes = 24;
  IntegralReport r = integral_formula_1(item.W, o);
  EXPECT_GT(r.magnitude, 0.1);
  EXPECT_LE(std::fabs(r.value), 1e-6);
}

TEST(IntegralFormula1, CoarseGridShowsTruncation) {
  // the check is not vacuous: a 4-node grid is visibly inexact
  auto item = conformal_torus({{"X", conformal_gradient_field()}});
  QuadratureOptions o;
  o.nodes = 4;
  EXPECT_GT(std::fabs(integral_formula_1(item.W, o).value), 1e-6);
}

TEST(IntegralFormula1, RejectsZeroWeights) {
  EXPECT_THROW(flat_torus({{"N", "0"}}), InputError);
  EXPECT_THROW(flat_torus({{"calN", "0"}}), InputError);
}

TEST(IntegralFormula2, ProductLeaf) {
  auto item = flat_torus({{"nu", "2"}});
  std::vector<double> base{0.0, 0.0, 0.4};
  QuadratureOptions o;
  o.nodes = 8;
  EXPECT_NEAR(integral_formula_2_leafwise(item.W, {0, 1}, base, o).value, 0.0, 1e-12);
}

TEST(IntegralFormula2, TwistedLeafWithTangentWeight) {
  auto item = twisted_leaf_torus();
  for (double z : {0.0, 0.7, 2.9}) {
    std::vector<double> base{0.0, 0.0, z};
    IntegralReport r = integral_formula_2_leafwise(item.W, item.leaf_coordinates, base, {}, kMaxQuadratureNodes);
    EXPECT_GT(r.magnitude, 0.1);
    EXPECT_LE(std::fabs(r.value), 1e-6) << z;
    EXPECT_GE(r.history.size(), 2u);
  }
}

TEST(IntegralFormula2, HypothesisViolations) {
  // base warping depends on the fibre coordinate, so leaves are not minimal
  auto item = doubly_twisted_torus({{"nu", "2"}, {"n", "1"}});
  std::vector<double> base{0.0, 0.0, 0.5};
  EXPECT_THROW(integral_formula_2_leafwise(item.W, {0, 1}, base), HypothesisError);
  auto normal = twisted_leaf_torus({{"X", "0;0;0.3"}});
  EXPECT_THROW(integral_formula_2_leafwise(normal.W, {0, 1}, base), HypothesisError);
  auto leaf = twisted_leaf_torus();
  EXPECT_THROW(integral_formula_2_leafwise(leaf.W, {0, 2}, base), HypothesisError);
  EXPECT_THROW(integral_formula_2_leafwise(leaf.W, {0}, base), InputError);
}

TEST(Splitting, ProductZeroField) {
  auto item = flat_torus({{"nu", "2"}});
  std::vector<double> p{0.3, 0.2, 0.1};
  for (auto v : {SplittingVariant::Harmonic, SplittingVariant::Umbilic}) {
    SplittingTerms t = splitting_integrands(item.W, p, v);
    for (const auto& [name, val] : t.terms) EXPECT_NEAR(val, 0.0, 1e-14) << name;
    EXPECT_NEAR(t.residual, 0.0, 1e-12);
  }
}

TEST(Splitting, ProductTangentFieldNegativeN) {
  auto item = flat_torus({{"nu", "2"}, {"X", "0.5;0;0"}, {"N", "-2"}});
  std::vector<double> p{0.3, 0.2, 0.1};
  SplittingTerms t = splitting_integrands(item.W, p, SplittingVariant::Harmonic);
  double xterm = 0.0, S = 0.0;
  for (const auto& [name, val] : t.terms) {
    if (name == "minus_X_norm2_over_2N") xterm = val;
    if (name == "S_mix_weighted") S = val;
  }
  EXPECT_NEAR(xterm, 0.25 / 4.0, 1e-14);
  EXPECT_GT(xterm, 0.0);
  EXPECT_NEAR(S, -0.25 / 4.0, 1e-14);
  EXPECT_NEAR(t.residual, 0.0, 1e-10);
}

TEST(Splitting, DoublyTwistedUmbilicTerm) {
  auto item = doubly_twisted_torus({{"N", "3"}, {"calN", "2"}, {"X", "0.2*sin(x1);0.1;0.3*cos(x0)"}});
  const Expr& u = item.twisted_uv->first;
  const Expr& v = item.twisted_uv->second;
  for (const auto& p : sample_points(item.W.manifold(), 10, 31)) {
    SplittingTerms t = splitting_integrands(item.W, p, SplittingVariant::Umbilic);
    // analytic: H⊥ = −n ∇⊤ log u with ∇⊤ log u = v⁻² ∂_0 log u ∂_0 (ν = 1)
    auto ud = u.eval<Dual<double>>(std::span<const Dual<double>>(
        std::vector<Dual<double>>{Dual<double>::variable(p[0], 0), Dual<double>::variable(p[1], 1),
                                  Dual<double>::variable(p[2], 2)}));
    double vv = v.eval_value(p);
    double dlogu = ud.d[0] / ud.v;
    double Hbot2 = 4.0 * dlogu * dlogu / (vv * vv);
    double term = 0.0;
    for (const auto& [name, val] : t.terms)
      if (name == "minus_H_bot_term") term = val;
    EXPECT_NEAR(term, -0.5 * Hbot2, 1e-10);
    EXPECT_NEAR(t.residual, 0.0, 1e-7);
  }
}

TEST(Splitting, HarmonicOnTwistedLeaves) {
  auto item = twisted_leaf_torus({{"X", "0;0;0"}, {"N", "-1"}});
  for (const auto& p : sample_points(item.W.manifold(), 10, 32)) {
    SplittingTerms t = splitting_integrands(item.W, p, SplittingVariant::Harmonic);
    EXPECT_NEAR(t.residual, 0.0, 1e-7);
  }
  // the default tangent field is not orthogonal to H⊥
  auto weighted = twisted_leaf_torus();
  std::vector<double> p{0.3, 1.1, 0.4};
  EXPECT_THROW(splitting_integrands(weighted.W, p, SplittingVariant::Harmonic), HypothesisError);
}

TEST(Splitting, UmbilicHypothesisGuard) {
  auto item = helical_torus();
  std::vector<double> p{0.3, 1.1, 0.4};
  EXPECT_THROW(splitting_integrands(item.W, p, SplittingVariant::Umbilic), HypothesisError);
}

}  // namespace
}  // namespace foliate
