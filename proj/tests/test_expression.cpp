#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace routhlab;
using rt::vec;

namespace {

double eval(const std::string& text, std::vector<double> x = {}, std::vector<double> v = {}) {
  return Expression::parse(text).eval(std::span<const double>(x), std::span<const double>(v));
}

}  // namespace

TEST(Expression, PrecedenceAndAssociativity) {
  EXPECT_DOUBLE_EQ(eval("1 + 2*3"), 7.0);
  EXPECT_DOUBLE_EQ(eval("2^3^2"), 512.0);
  EXPECT_DOUBLE_EQ(eval("-2^2"), -4.0);
  EXPECT_DOUBLE_EQ(eval("(1+2)*3 - 4/2"), 7.0);
  EXPECT_DOUBLE_EQ(eval("8/4/2"), 1.0);
  EXPECT_DOUBLE_EQ(eval("2*-3"), -6.0);
  EXPECT_DOUBLE_EQ(eval("1.5e2 + .5"), 150.5);
}

TEST(Expression, FunctionsAndVariables) {
  EXPECT_DOUBLE_EQ(eval("sqrt(x1) + v2", {4.0}, {0.0, 3.0}), 5.0);
  EXPECT_NEAR(eval("sin(pi/2) + cos(0) + exp(0) + log(1)"), 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(eval(" x1 * x2 ", {3.0, 4.0}), 12.0);
}

TEST(Expression, WhitespaceInsensitive) {
  EXPECT_DOUBLE_EQ(eval("0.5*(v1^2+v2^2)-x1", {1.0}, {1.0, 2.0}),
                   eval("  0.5 * ( v1 ^ 2 + v2 ^ 2 ) - x1 ", {1.0}, {1.0, 2.0}));
}

TEST(Expression, ParseErrorsCarryPosition) {
  try {
    Expression::parse("v1^2/");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1);
    EXPECT_EQ(e.column(), 6);
  }
  EXPECT_THROW(Expression::parse("(x1 + 2"), ParseError);
  EXPECT_THROW(Expression::parse("foo(x1)"), ParseError);
  EXPECT_THROW(Expression::parse("x0"), ParseError);
  EXPECT_THROW(Expression::parse("1 2"), ParseError);
  EXPECT_THROW(Expression::parse(""), ParseError);
}

TEST(Expression, ArityError) {
  EXPECT_THROW(Expression::parse("x3 + v1", 2), ArityError);
  EXPECT_THROW(Expression::parse("v3", 2), ArityError);
  EXPECT_NO_THROW(Expression::parse("x2 + v2", 2));
}

TEST(Expression, DomainErrors) {
  EXPECT_THROW(eval("sqrt(x1)", {-1.0}), DomainError);
  EXPECT_THROW(eval("log(x1)", {0.0}), DomainError);
  EXPECT_THROW(eval("1/x1", {0.0}), DomainError);
  EXPECT_THROW(eval("x1^0.5", {-2.0}), DomainError);
}

TEST(Expression, JetEvaluationMatchesClosedForm) {
  const Expression e = Expression::parse("x1*sin(v1) + v1^3/x2", 2);
  const Jet x1 = Jet::variable(0.7, 0, 4), x2 = Jet::variable(1.3, 1, 4);
  const Jet v1 = Jet::variable(0.4, 2, 4), v2 = Jet::variable(-0.2, 3, 4);
  const std::vector<Jet> x{x1, x2}, v{v1, v2};
  const Jet r = e.eval<Jet>(std::span<const Jet>(x), std::span<const Jet>(v));
  EXPECT_NEAR(r.value(), 0.7 * std::sin(0.4) + 0.064 / 1.3, 1e-15);
  EXPECT_NEAR(r.d(2), 0.7 * std::cos(0.4) + 3 * 0.16 / 1.3, 1e-15);
  EXPECT_NEAR(r.d2(0, 2), std::cos(0.4), 1e-15);
  EXPECT_NEAR(r.d2(1, 2), -3 * 0.16 / (1.3 * 1.3), 1e-15);
  EXPECT_NEAR(r.d2(2, 2), -0.7 * std::sin(0.4) + 6 * 0.4 / 1.3, 1e-14);
  EXPECT_EQ(r.d(3), 0.0);
}
