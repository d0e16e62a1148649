#include <gtest/gtest.h>

#include "support.hpp"

using namespace routhlab;
using rt::vec;

namespace {

ScalarField half_norm_sq() {
  return make_ad_field(2, [](auto, auto y) { return 0.5 * (y[0] * y[0] + y[1] * y[1]); }, "q");
}

// Slit-bundle field defined only for y0 > 0.
ScalarField slit_field() {
  return ScalarField(
      2,
      [](const Vec& x, const Vec& y) {
        if (!(y[0] > 0.0)) throw DomainError("y0 must be positive");
        return y[0] * std::log(y[0]) + x[0] * y[1];
      },
      [](const Vec& x, const Vec& y) {
        if (!(y[0] > 0.0)) throw DomainError("y0 must be positive");
        SecondJet j = SecondJet::zeros(2);
        j.value = y[0] * std::log(y[0]) + x[0] * y[1];
        return j;
      },
      "slit");
}

}  // namespace

TEST(Jet, ArithmeticMatchesHandDerivatives) {
  const Jet a = Jet::variable(2.0, 0, 2);
  const Jet b = Jet::variable(3.0, 1, 2);
  const Jet f = a * a * b + sin(b) / a;
  EXPECT_DOUBLE_EQ(f.value(), 12.0 + std::sin(3.0) / 2.0);
  EXPECT_DOUBLE_EQ(f.d(0), 2 * 2.0 * 3.0 - std::sin(3.0) / 4.0);
  EXPECT_DOUBLE_EQ(f.d(1), 4.0 + std::cos(3.0) / 2.0);
  EXPECT_DOUBLE_EQ(f.d2(0, 0), 2 * 3.0 + 2 * std::sin(3.0) / 8.0);
  EXPECT_DOUBLE_EQ(f.d2(0, 1), 2 * 2.0 - std::cos(3.0) / 4.0);
  EXPECT_DOUBLE_EQ(f.d2(1, 0), f.d2(0, 1));
  EXPECT_DOUBLE_EQ(f.d2(1, 1), -std::sin(3.0) / 2.0);
}

TEST(Jet, PowExpLogChain) {
  const Jet x = Jet::variable(1.5, 0, 1);
  const Jet f = pow(x, 2.5) + exp(x) * log(x) - sqrt(x);
  const double v = 1.5;
  EXPECT_NEAR(f.d(0), 2.5 * std::pow(v, 1.5) + std::exp(v) * (std::log(v) + 1 / v) - 0.5 / std::sqrt(v),
              1e-14);
  EXPECT_NEAR(f.d2(0, 0),
              3.75 * std::pow(v, 0.5) + std::exp(v) * (std::log(v) + 2 / v - 1 / (v * v)) +
                  0.25 * std::pow(v, -1.5),
              1e-13);
}

TEST(JetOp, QuadraticForm) {
  const SecondJet j = jet(half_norm_sq(), vec({0, 0}), vec({3, 4}));
  EXPECT_DOUBLE_EQ(j.value, 12.5);
  EXPECT_EQ(j.d_y, vec({3, 4}));
  EXPECT_EQ(j.d_yy, Mat::Identity(2, 2));
  EXPECT_EQ(j.d_x, Vec::Zero(2));
  EXPECT_EQ(j.d_xy, Mat::Zero(2, 2));
}

TEST(JetOp, FtauAtOriginTauZero) {
  const SecondJet j = jet(ftau(0.0).field(), vec({0, 0}), vec({1, 0}));
  EXPECT_DOUBLE_EQ(j.value, 0.5);
}

TEST(JetOp, FtauTauOneMatchesSymbolicOracle) {
  // Reference values from symbolic differentiation at x = (0.2, -0.1), y = (0.6, 0.3).
  const SecondJet j = jet(ftau(1.0).field(), vec({0.2, -0.1}), vec({0.6, 0.3}));
  EXPECT_NEAR(j.value, 0.28990547013154574154, 1e-15);
  EXPECT_NEAR(j.d_x[0], -0.035829275734086003563, 1e-15);
  EXPECT_NEAR(j.d_x[1], 0.25475674313020089652, 1e-15);
  EXPECT_NEAR(j.d_y[0], 0.41811957421048204135, 1e-15);
  EXPECT_NEAR(j.d_y[1], 0.13011241868418838910, 1e-15);
  EXPECT_NEAR(j.d_yy(0, 0), 0.15691705105261682080, 1e-14);
  EXPECT_NEAR(j.d_yy(0, 1), -0.31383410210523364160, 1e-14);
  EXPECT_NEAR(j.d_yy(1, 1), 0.62766820421046728320, 1e-14);
  EXPECT_NEAR(j.d_xy(0, 0), 0.17605034703599243846, 1e-14);
  EXPECT_NEAR(j.d_xy(0, 1), -0.47153161318560488880, 1e-14);
  EXPECT_NEAR(j.d_xy(1, 0), 0.43829061595568799129, 1e-14);
  EXPECT_NEAR(j.d_xy(1, 1), -0.027392088144039660862, 1e-14);
}

TEST(JetOp, HessianExactlySymmetric) {
  rt::Rng rng(11);
  const ScalarField f = ftau(0.7).field();
  for (int k = 0; k < 200; ++k) {
    const SecondJet j = jet(f, rng.in_disk(0.9), rng.normal_vec(2));
    EXPECT_EQ(j.d_yy(0, 1), j.d_yy(1, 0));
    EXPECT_TRUE(j.all_finite());
  }
}

TEST(JetOp, Deterministic) {
  const ScalarField f = ftau(0.3).field();
  const SecondJet a = jet(f, vec({0.1, 0.2}), vec({0.3, -0.4}));
  const SecondJet b = jet(f, vec({0.1, 0.2}), vec({0.3, -0.4}));
  EXPECT_EQ(a.value, b.value);
  EXPECT_EQ(a.d_xy, b.d_xy);
  EXPECT_EQ(a.d_yy, b.d_yy);
}

TEST(JetOp, ArityAndDomainErrors) {
  EXPECT_THROW(jet(half_norm_sq(), vec({0, 0, 0}), vec({1, 1, 1})), ArityError);
  EXPECT_THROW(jet(ftau(0.0).field(), vec({0, 0}), vec({0, 0})), DomainError);
  EXPECT_THROW(ftau(0.0).jet(vec({1.2, 0}), vec({1, 0})), DomainError);
  EXPECT_THROW(make_ad_field(7, [](auto, auto y) { return y[0]; }, "big"), ConfigError);
}

TEST(FdJet, ExactForQuadratics) {
  const ScalarField f = half_norm_sq();
  const SecondJet a = jet(f, vec({0.3, 0.1}), vec({3, 4}));
  const SecondJet b = fd_jet(f, vec({0.3, 0.1}), vec({3, 4}));
  EXPECT_LE((a.d_y - b.d_y).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE((a.d_yy - b.d_yy).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE((a.d_xy - b.d_xy).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_NEAR(a.value, b.value, 1e-12);
}

TEST(FdJet, FtauTauOneAgreesWithAutodiff) {
  rt::Rng rng(5);
  const ScalarField f = ftau(1.0).field();
  for (int k = 0; k < 50; ++k) {
    const Vec x = rng.in_disk(0.8);
    // The stencil uses absolute steps, so keep |y| well above them.
    const Vec y = rng.uniform(0.5, 2.0) * rng.normal_vec(2).normalized();
    EXPECT_LE(jet_discrepancy(jet(f, x, y), fd_jet(f, x, y)), 1e-6);
  }
}

TEST(FdJet, StencilLeavingDomain) {
  const ScalarField f = slit_field();
  const double h = 1e-3;
  EXPECT_THROW(fd_jet(f, vec({0, 0}), vec({h / 2, 1}), h), StencilDomainError);
  EXPECT_THROW(fd_jet(f, vec({0, 0}), vec({-1, 1}), h), DomainError);
  EXPECT_THROW(fd_jet(f, vec({0, 0}), vec({1, 1}), 0.0), PreconditionError);
}

TEST(FdJet, EulerIdentityForOneHomogeneousFields) {
  rt::Rng rng(8);
  for (double tau : {0.0, 0.5, 1.0}) {
    const ScalarField f = ftau(tau).field();
    for (int k = 0; k < 100; ++k) {
      const Vec y = rng.normal_vec(2);
      const SecondJet j = jet(f, rng.in_disk(0.9), y);
      EXPECT_LE(rel_diff(y.dot(j.d_y), j.value), 1e-10);
    }
  }
}

TEST(Compose, ChainRuleAgainstDirectAutodiff) {
  const ScalarField f = ftau(0.4).field();
  const Vec x = vec({0.1, -0.3});
  const Vec y = vec({0.5, 0.2});
  const SecondJet j = jet(f, x, y);
  const double v = j.value;
  const SecondJet c = compose(j, std::exp(v), std::exp(v), std::exp(v));
  const ScalarField g = make_ad_field(
      2,
      [](auto x, auto y) {
        using std::exp;
        using std::sqrt;
        const auto s = 1.0 - x[0] * x[0] - x[1] * x[1];
        return exp((sqrt(y[0] * y[0] + y[1] * y[1]) + 0.4 * (x[1] * y[0] - x[0] * y[1])) / (2.0 * s));
      },
      "exp_ftau");
  EXPECT_LE(jet_discrepancy(c, jet(g, x, y)), 1e-13);
}
