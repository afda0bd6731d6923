#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "diracvar/expression.hpp"
#include "test_support.hpp"

using namespace diracvar;
using namespace testing_support;

namespace {

const std::vector<std::string> xyz{"x", "y", "z"};

double eval(const std::string& text, const Vec& x = vec({0.3, -0.7, 1.2})) {
  return Expression::parse(text, xyz)(x);
}

}  // namespace

TEST(Expression, PrecedenceAndAssociativity) {
  EXPECT_EQ(eval("1+2*3^2"), 19.0);
  EXPECT_EQ(eval("-2^2"), -4.0);
  EXPECT_EQ(eval("2^3^2"), 512.0);
  EXPECT_EQ(eval("2**3"), 8.0);
  EXPECT_EQ(eval("8/4/2"), 1.0);
  EXPECT_EQ(eval("10-4-3"), 3.0);
  EXPECT_EQ(eval("2^-1"), 0.5);
  EXPECT_DOUBLE_EQ(eval("(1+2)*(3-1)/4"), 1.5);
  EXPECT_DOUBLE_EQ(eval("1.5e-1 * 2"), 0.3);
}

TEST(Expression, VariablesParametersAndFunctions) {
  const Vec x = vec({0.3, -0.7, 1.2});
  EXPECT_DOUBLE_EQ(eval("x*y + z", x), 0.3 * -0.7 + 1.2);
  EXPECT_DOUBLE_EQ(eval("sin(x)^2 + cos(x)^2", x), 1.0);
  EXPECT_DOUBLE_EQ(eval("2*pi"), 2 * M_PI);
  EXPECT_DOUBLE_EQ(eval("sqrt(abs(y)) + exp(log(z)) + atan(1)", x), std::sqrt(0.7) + 1.2 + M_PI / 4);
  const auto e = Expression::parse("0.5*B*(x*y)", xyz, {{"B", 4.0}});
  EXPECT_DOUBLE_EQ(e(x), 2.0 * 0.3 * -0.7);
}

TEST(Expression, IntegerPowersAreExactOnNegativeBases) {
  EXPECT_EQ(eval("y^2", vec({0, -0.7, 0})), -0.7 * -0.7);
  EXPECT_EQ(eval("y^3", vec({0, -0.7, 0})), -0.7 * -0.7 * -0.7);
}

TEST(Expression, Errors) {
  EXPECT_THROW(eval("x + w"), ConfigError);
  EXPECT_THROW(eval("(x + y"), ConfigError);
  EXPECT_THROW(eval("x y"), ConfigError);
  EXPECT_THROW(eval(""), ConfigError);
  EXPECT_THROW(eval("sin x"), ConfigError);
  EXPECT_THROW(eval("x + * y"), ConfigError);
  try {
    eval("x + foo");
  } catch (const ConfigError& err) {
    EXPECT_NE(std::string(err.what()).find("foo"), std::string::npos);
  }
}

TEST(Expression, ConstantFolding) {
  EXPECT_TRUE(Expression::parse("2*3 - 6", xyz).is_zero());
  EXPECT_TRUE(Expression::parse("0*x", xyz).is_zero());
  EXPECT_TRUE(Expression::parse("y", xyz).derivative(0).is_zero());
  EXPECT_FALSE(Expression::parse("x", xyz).is_constant());
}

// Symbolic derivative against dual evaluation and central differences.
TEST(Expression, DerivativeAgreesWithDualAndFiniteDifferences) {
  const std::vector<std::string> cases{
      "x^2*y - z/(1+x^2)", "sin(x*y)*exp(z/3)", "sqrt(1 + x^2 + y^2)", "log(2 + cos(x)) * tanh(y - z)",
      "x^y", "atan(x - y) + sinh(z) * cosh(x)", "abs(x - 5) + tan(0.3*y)", "(2 + x + y + z)^-2 - 3*x^3"};
  std::mt19937 rng(41);
  for (const auto& text : cases) {
    const Expression e = Expression::parse(text, xyz);
    const VecFn fn = vecfn_from(3, {e});
    for (int trial = 0; trial < 20; ++trial) {
      Vec x = random_vec(3, rng, 1.0);
      x(0) = std::abs(x(0)) + 0.2;  // keeps x^y real
      const Mat J = jacobian(fn, x, DiffBackend::forward_dual());
      const Mat Jc = jacobian(fn, x, DiffBackend::central());
      for (int k = 0; k < 3; ++k) {
        const double sym = e.derivative(k)(x);
        EXPECT_NEAR(sym, J(0, k), 1e-12 * (1 + std::abs(sym))) << text;
        EXPECT_NEAR(sym, Jc(0, k), 1e-7 * (1 + std::abs(sym))) << text;
      }
    }
  }
}

TEST(Expression, PrintedFormReparses) {
  std::mt19937 rng(2);
  for (const std::string text : {"x - (y - z)", "-(x + y)^2", "x/(y*z)", "2^(x - 1)", "-x^2 - -y", "sin(-x)*3"}) {
    const Expression e = Expression::parse(text, xyz);
    const Expression back = Expression::parse(e.to_string(), xyz);
    for (int i = 0; i < 5; ++i) {
      const Vec x = random_vec(3, rng, 1.0);
      EXPECT_DOUBLE_EQ(e(x), back(x)) << text << " -> " << e.to_string();
    }
  }
}

TEST(Expression, FieldBuilders) {
  const Chart c = space3();
  const auto pi = skew_field_from(c, Variance::contravariant, {{0, 1, Expression::parse("x^2", xyz)}});
  const Mat m = pi(vec({2, 0, 0}));
  EXPECT_EQ(m(0, 1), 4.0);
  EXPECT_EQ(m(1, 0), -4.0);
  EXPECT_EQ(m(2, 0), 0.0);
  EXPECT_THROW(skew_field_from(c, Variance::covariant, {{1, 1, Expression::parse("x", xyz)}}), ConfigError);
  EXPECT_THROW(vector_field_from(c, {Expression::parse("x", xyz)}), ConfigError);
  const auto dg = differentials_from(c, {Expression::parse("x*z + y^2", xyz)});
  const Vec d = dg[0](vec({1, 2, 3}));
  EXPECT_EQ(d(0), 3.0);
  EXPECT_EQ(d(1), 4.0);
  EXPECT_EQ(d(2), 1.0);
}
