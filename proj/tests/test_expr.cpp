#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>

#include "foliate/expr.hpp"

namespace foliate {
namespace {

double value(const std::string& s, std::vector<double> p) {
  return parse(s, static_cast<int>(p.size())).eval_value(p);
}

TEST(Parse, PrecedenceMatchesGrammar) {
  Expr e = parse("x0^2 + sin(x1)", 2);
  ASSERT_EQ(e.root()->op, Op::Add);
  EXPECT_EQ(e.root()->lhs->op, Op::Pow);
  EXPECT_TRUE(e.root()->lhs->int_exponent);
  EXPECT_EQ(e.root()->lhs->exponent, 2);
  EXPECT_EQ(e.root()->rhs->op, Op::Call);
  EXPECT_EQ(e.root()->rhs->func, Func::Sin);
}

TEST(Parse, UnaryMinusUnderProduct) {
  EXPECT_DOUBLE_EQ(value("2*-x0", {3.0}), -6.0);
}

TEST(Parse, PowerBindsTighterThanNegationAndIsRightAssociative) {
  EXPECT_DOUBLE_EQ(value("-x0^2", {3.0}), -9.0);
  EXPECT_DOUBLE_EQ(value("2^3^2", {0.0}), 512.0);
  EXPECT_DOUBLE_EQ(value("x0^-2", {2.0}), 0.25);
  EXPECT_DOUBLE_EQ(value("(1+x0)*(2 - x0)/4", {1.0}), 0.5);
}

TEST(Parse, ConstantsAndWhitespace) {
  EXPECT_DOUBLE_EQ(value("  pi *  e ", {0.0}), std::numbers::pi * std::numbers::e);
  EXPECT_DOUBLE_EQ(value("1.5e2 + .5", {0.0}), 150.5);
}

TEST(Parse, CoordinateOutOfRange) {
  try {
    parse("x3", 2);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 0u);
    EXPECT_NE(std::string(e.what()).find("out of range"), std::string::npos);
  }
}

TEST(Parse, ErrorsCarryOffsets) {
  auto offset_of = [](const std::string& s) -> std::size_t {
    try {
      parse(s, 2);
    } catch (const ParseError& e) {
      return e.offset();
    }
    return std::string::npos;
  };
  EXPECT_EQ(offset_of("x0 + foo"), 5u);
  EXPECT_EQ(offset_of("x0 + "), 5u);
  EXPECT_EQ(offset_of("(x0 + 1"), 7u);
  EXPECT_EQ(offset_of("x0 $ 1"), 3u);
  EXPECT_EQ(offset_of("sin x0"), 4u);
  EXPECT_EQ(offset_of(""), 0u);
}

TEST(Eval, DomainErrorsNameTheSubexpression) {
  Expr e = parse("1 + log(x0 - 1)", 1);
  std::vector<double> p{0.5};
  try {
    e.eval_value(p);
    FAIL();
  } catch (const DomainError& err) {
    EXPECT_NE(err.subexpression().find("log"), std::string::npos);
  }
  EXPECT_THROW(parse("sqrt(x0)", 1).eval_value(std::vector<double>{-1.0}), DomainError);
  EXPECT_THROW(parse("1/x0", 1).eval_value(std::vector<double>{0.0}), DomainError);
  EXPECT_THROW(parse("x0^0.5", 1).eval_value(std::vector<double>{-2.0}), DomainError);
  // integer exponents do not need a positive base
  EXPECT_DOUBLE_EQ(parse("x0^3", 1).eval_value(std::vector<double>{-2.0}), -8.0);
}

TEST(Jet, BilinearForm) {
  Jet2 j = parse("x0*x1", 2).eval_jet(std::vector<double>{2.0, 3.0});
  EXPECT_DOUBLE_EQ(j.v, 6.0);
  EXPECT_DOUBLE_EQ(j.grad(0), 3.0);
  EXPECT_DOUBLE_EQ(j.grad(1), 2.0);
  EXPECT_DOUBLE_EQ(j.hess(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(j.hess(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(j.hess(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(j.hess(1, 1), 0.0);
}

TEST(Jet, SineAtZero) {
  Jet2 j = parse("sin(x0)", 1).eval_jet(std::vector<double>{0.0});
  EXPECT_DOUBLE_EQ(j.v, 0.0);
  EXPECT_DOUBLE_EQ(j.grad(0), 1.0);
  EXPECT_DOUBLE_EQ(j.hess(0, 0), 0.0);
}

// Fourth-order central differences of the plain value with long double
// accumulation; independent of the jet arithmetic.
struct FiniteDifference {
  const Expr& e;
  double step = 1e-4;

  long double f(std::vector<double> p) const { return e.eval_value(p); }

  double grad(std::vector<double> p, int i) const {
    auto at = [&](double s) {
      auto q = p;
      q[i] += s;
      return f(q);
    };
    long double h = step;
    return static_cast<double>((-at(2 * step) + 8 * at(step) - 8 * at(-step) + at(-2 * step)) /
                               (12 * h));
  }

  double hess(std::vector<double> p, int i, int j) const {
    auto gi = [&](double s) {
      auto q = p;
      q[j] += s;
      return static_cast<long double>(grad(q, i));
    };
    long double h = step;
    return static_cast<double>((-gi(2 * step) + 8 * gi(step) - 8 * gi(-step) + gi(-2 * step)) /
                               (12 * h));
  }
};

std::string random_polynomial(std::mt19937_64& rng, int dim) {
  std::uniform_int_distribution<int> nterms(2, 5), var(0, dim - 1), deg(0, 3);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  std::string s;
  int n = nterms(rng);
  for (int t = 0; t < n; ++t) {
    if (t) s += " + ";
    s += "(" + detail::format_number(coef(rng)) + ")";
    for (int k = 0; k < 3; ++k) s += "*x" + std::to_string(var(rng)) + "^" + std::to_string(deg(rng));
  }
  return s;
}

TEST(Jet, RandomPolynomialsMatchFiniteDifferences) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coord(-1.5, 1.5);
  for (int trial = 0; trial < 40; ++trial) {
    const int dim = 3;
    Expr e = parse(random_polynomial(rng, dim), dim);
    std::vector<double> p{coord(rng), coord(rng), coord(rng)};
    Jet2 j = e.eval_jet(p);
    FiniteDifference fd{e};
    for (int i = 0; i < dim; ++i) {
      double g = fd.grad(p, i);
      EXPECT_NEAR(j.grad(i), g, 1e-6 * std::max(1.0, std::fabs(g))) << e.print();
      for (int k = 0; k < dim; ++k) {
        double h = fd.hess(p, i, k);
        EXPECT_NEAR(j.hess(i, k), h, 1e-6 * std::max(1.0, std::fabs(h))) << e.print();
      }
    }
  }
}

TEST(Jet, ElementaryFunctionsMatchFiniteDifferences) {
  const char* sources[] = {"exp(sin(x0)*x1) + cosh(x1)/(2 + x0^2)",
                           "log(3 + cos(x0*x1)) * sqrt(2 + tanh(x1))",
                           "tan(0.3*x0) - sinh(x1)*x0^-1", "(2 + x0^2)^(0.5*x1)"};
  std::vector<double> p{0.7, -0.4};
  for (const char* src : sources) {
    Expr e = parse(src, 2);
    Jet2 j = e.eval_jet(p);
    FiniteDifference fd{e};
    EXPECT_NEAR(j.v, e.eval_value(p), 1e-15);
    for (int i = 0; i < 2; ++i) {
      EXPECT_NEAR(j.grad(i), fd.grad(p, i), 1e-6) << src;
      for (int k = 0; k < 2; ++k) EXPECT_NEAR(j.hess(i, k), fd.hess(p, i, k), 1e-6) << src;
    }
  }
}

TEST(Jet, NestedDualAgreesWithJet2) {
  Expr e = parse("exp(x0*x1) * sin(x1 - x0^2)", 2);
  std::vector<double> p{0.3, 1.1};
  Jet2 j = e.eval_jet(p);
  using DD = Dual<Dual<double>>;
  std::vector<DD> xs{seed_variable<DD>(p[0], 0), seed_variable<DD>(p[1], 1)};
  DD r = e.eval<DD>(xs);
  EXPECT_NEAR(r.v.v, j.v, 1e-14);
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(r.v.d[i], j.grad(i), 1e-13);
    for (int k = 0; k < 2; ++k) EXPECT_NEAR(r.d[i].d[k], j.hess(i, k), 1e-12);
  }
}

// print/parse round trip over randomly generated trees.
std::string random_source(std::mt19937_64& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 9);
  std::uniform_real_distribution<double> num(0.0, 10.0);
  static const char* funcs[] = {"sin", "cos", "tan", "exp", "log", "sqrt", "cosh", "sinh", "tanh"};
  switch (pick(rng)) {
    case 0: return detail::format_number(num(rng));
    case 1: return "x" + std::to_string(rng() % 3);
    case 2: return "pi";
    case 3: return random_source(rng, depth - 1) + " + " + random_source(rng, depth - 1);
    case 4: return random_source(rng, depth - 1) + " - " + random_source(rng, depth - 1);
    case 5: return random_source(rng, depth - 1) + " * " + random_source(rng, depth - 1);
    case 6: return "(" + random_source(rng, depth - 1) + ") / (" + random_source(rng, depth - 1) + ")";
    case 7: return "(" + random_source(rng, depth - 1) + ")^" + std::to_string(rng() % 4);
    case 8: return "-" + random_source(rng, depth - 1);
    default:
      return std::string(funcs[rng() % 9]) + "(" + random_source(rng, depth - 1) + ")";
  }
}

TEST(Expr, PrintParseRoundTrip) {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 300; ++i) {
    std::string src = random_source(rng, 4);
    Expr e = parse(src, 3);
    Expr again = parse(e.print(), 3);
    EXPECT_TRUE(structurally_equal(e, again)) << src << " -> " << e.print();
  }
}

TEST(Expr, FuzzedStringsNeverCrash) {
  std::mt19937_64 rng(2024);
  const std::string alphabet = "x0123.+-*/^() sincoexplgqrtha,e$";
  int errors = 0, ok = 0;
  for (int i = 0; i < 3000; ++i) {
    std::string s;
    int len = 1 + static_cast<int>(rng() % 14);
    for (int k = 0; k < len; ++k) s += alphabet[rng() % alphabet.size()];
    try {
      Expr e = parse(s, 3);
      ++ok;
      (void)e;
    } catch (const ParseError& err) {
      EXPECT_LE(err.offset(), s.size());
      ++errors;
    }
  }
  EXPECT_GT(errors, 0);
  EXPECT_GT(ok, 0);
}

}  // namespace
}  // namespace foliate
