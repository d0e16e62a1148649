#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace routhlab;
using rt::vec;

namespace {

LagrangianModel conformal_magnetic() { return magnetic(rt::conformal_magnetic_coefficients()); }

LagrangianModel jacobi_example() {
  return simple_mechanical(euclidean_metric(2), rt::half_square(2));
}

}  // namespace

TEST(CanonicalSpray, EuclideanNormHasNoAcceleration) {
  const FinslerModel F = jacobi_finsler(
      simple_mechanical(euclidean_metric(3), CoordMap::constant(3, {0.0})), 0.5);
  rt::Rng rng(1);
  for (int k = 0; k < 50; ++k) {
    const Vec a = canonical_spray(F, rng.normal_vec(3), rng.normal_vec(3)).accel;
    EXPECT_LE(a.norm(), 1e-9);
  }
}

TEST(CanonicalSpray, TwoHomogeneous) {
  const FinslerModel models[] = {ftau(0.5), jacobi_finsler(conformal_magnetic(), 1.5),
                                 randers_closed_form(conformal_magnetic(), 1.5)};
  rt::Rng rng(2);
  for (const FinslerModel& F : models) {
    for (int k = 0; k < 100; ++k) {
      const Vec x = rng.in_disk(0.8), y = rng.normal_vec(2);
      const double lam = rng.uniform(0.2, 5.0);
      const Vec a1 = canonical_spray(F, x, y).accel;
      const Vec a2 = canonical_spray(F, x, lam * y).accel;
      EXPECT_LE((a2 - lam * lam * a1).norm(), 1e-8 * std::max(1.0, lam * lam * a1.norm()));
    }
  }
}

TEST(CanonicalSpray, NumericAndClosedFormAgree) {
  const FinslerModel num = jacobi_finsler(conformal_magnetic(), 1.5);
  const FinslerModel closed = randers_closed_form(conformal_magnetic(), 1.5);
  rt::Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    const Vec x = rng.uniform_vec(2, -1, 1), y = rng.normal_vec(2);
    const Vec a = canonical_spray(num, x, y).accel, b = canonical_spray(closed, x, y).accel;
    EXPECT_LE((a - b).norm(), 1e-8 * std::max(1.0, b.norm()));
  }
}

TEST(CanonicalSpray, RiemannianMatchesChristoffelOracle) {
  // For F = sqrt(phi(x)) |y| with phi = exp(x1), the geodesic acceleration is
  // a = -(1/2)(2 (dlog phi . y) y - |y|^2 grad log phi) = -(y1 y - |y|^2 e1 / 2).
  const FinslerModel F(
      Provenance::NumericFe,
      make_ad_field(2,
                    [](auto x, auto y) {
                      using std::exp;
                      using std::sqrt;
                      return sqrt(exp(x[0]) * (y[0] * y[0] + y[1] * y[1]));
                    }),
      "conformal");
  rt::Rng rng(4);
  for (int k = 0; k < 50; ++k) {
    const Vec x = rng.normal_vec(2), y = rng.normal_vec(2);
    Vec expected = -y[0] * y;
    expected[0] += 0.5 * y.squaredNorm();
    EXPECT_LE((canonical_spray(F, x, y).accel - expected).norm(), 1e-10 * (1 + expected.norm()));
  }
}

TEST(ProjectiveShift, EqualsLagrangianAccelerationOnEnergyLevel) {
  for (const LagrangianModel& L : {conformal_magnetic(), jacobi_example()}) {
    const double e = 1.5;
    const FinslerModel F = jacobi_finsler(L, e);
    const LevelFunction iota = iota0_level(L, e);
    rt::Rng rng(5);
    for (int k = 0; k < 100; ++k) {
      const Vec x = rng.uniform_vec(2, -0.8, 0.8);
      const Vec v = rescale_to_energy(L, x, rng.normal_vec(2), e);
      ASSERT_NEAR(iota(x, v).value, 1.0, 1e-12);
      const Vec shifted = projective_shift(F, iota, x, v).accel;
      const Vec el = el_acceleration(L, x, v);
      EXPECT_LE((shifted - el).norm(), 1e-8 * std::max(1.0, el.norm()));
    }
  }
}

TEST(ProjectiveShift, DiffersByMultipleOfYAndPreservesLevel) {
  const LagrangianModel L = conformal_magnetic();
  const FinslerModel F = jacobi_finsler(L, 1.5);
  const LevelFunction iota = iota0_level(L, 1.5);
  rt::Rng rng(6);
  for (int k = 0; k < 100; ++k) {
    const Vec x = rng.uniform_vec(2, -1, 1), y = rng.normal_vec(2);
    const Vec a = canonical_spray(F, x, y).accel;
    const Vec b = projective_shift(F, iota, x, y).accel;
    const Vec d = b - a;
    EXPECT_LE(std::abs(d[0] * y[1] - d[1] * y[0]), 1e-9 * (1 + d.norm()) * y.norm());
    const FirstJet l = iota(x, y);
    EXPECT_LE(std::abs(y.dot(l.d_x) + b.dot(l.d_y)), 1e-9 * (1 + b.norm()));
  }
}

TEST(Geodesic, FConservedAlongCanonicalFlow) {
  const FinslerModel F = randers_closed_form(conformal_magnetic(), 1.5);
  GeodesicOptions go;
  go.integrate.tol = 1e-12;
  go.integrate.samples = 201;
  const Trajectory t = integrate_geodesic(F, vec({0.1, -0.2}), vec({0.5, 0.8}), 2.0, go);
  EXPECT_EQ(t.log_label, "F");
  EXPECT_LE(t.max_log_drift(), 1e-9);
  EXPECT_EQ(t.size(), 201u);
}

TEST(Geodesic, Preconditions) {
  const FinslerModel F = ftau(0.5);
  EXPECT_THROW(integrate_geodesic(F, vec({0, 0}), vec({0, 0}), 1.0), PreconditionError);
  GeodesicOptions go;
  go.parametrization = Parametrization::TangentToLevel;
  EXPECT_THROW(integrate_geodesic(F, vec({0, 0}), vec({1, 0}), 1.0, go), PreconditionError);
}

TEST(Geodesic, TangentParametrizationMatchesElFlow) {
  const LagrangianModel L = jacobi_example();
  const double e = 2.0;
  const Vec x0 = vec({0.2, -0.1});
  const Vec v0 = rescale_to_energy(L, x0, vec({0.6, 0.8}), e);
  IntegrateOptions io;
  io.tol = 1e-12;
  io.samples = 101;
  const Trajectory a = integrate_el(L, x0, v0, 1.5, io);
  GeodesicOptions go;
  go.integrate = io;
  go.parametrization = Parametrization::TangentToLevel;
  go.level = iota0_level(L, e);
  const Trajectory c = integrate_geodesic(jacobi_finsler(L, e), x0, v0, 1.5, go);
  ASSERT_EQ(a.size(), c.size());
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_LE((a.x[k] - c.x[k]).norm(), 1e-8);
}

TEST(FtauGeodesics, DiameterIsStraight) {
  GeodesicOptions go;
  go.integrate.samples = 401;
  const Trajectory t = integrate_geodesic(ftau(0.0), vec({0, 0}), vec({0.6, 0.8}), 3.0, go);
  const CircleFit fit = circle_fit(planar_points(t));
  EXPECT_TRUE(fit.collinear);
  EXPECT_LE(fit.rms_residual, 1e-9);
  EXPECT_NEAR(boundary_angle(fit), 90.0, 1e-6);
  EXPECT_LT(t.x.back().norm(), 1.0);
}

TEST(FtauGeodesics, CirclesThroughStartMeetBoundaryAtArccosTau) {
  const Vec x0 = vec({0.3, 0.0}), y0 = vec({0.0, 1.0});
  GeodesicOptions go;
  go.integrate.tol = 1e-12;
  go.integrate.samples = 801;
  for (double tau : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const Trajectory t = integrate_geodesic(ftau(tau), x0, y0, 1.0, go);
    const CircleFit fit = circle_fit(planar_points(t));
    ASSERT_FALSE(fit.collinear);
    // Tangent to y0 at x0 puts the center on the x1 axis.
    EXPECT_NEAR(fit.center[1], 0.0, 1e-7 * fit.radius);
    EXPECT_NEAR(std::abs(fit.center[0] - 0.3), fit.radius, 1e-7 * fit.radius);
    EXPECT_LE(fit.rms_residual / fit.radius, 1e-8);
    EXPECT_NEAR(boundary_angle(fit), std::acos(tau) * 180.0 / M_PI, 1e-5) << "tau " << tau;
  }
}

TEST(FtauGeodesics, KnownCircles) {
  const Vec x0 = vec({0.3, 0.0}), y0 = vec({0.0, 1.0});
  GeodesicOptions go;
  go.integrate.tol = 1e-12;
  go.integrate.samples = 801;
  // tau = 0: orthogonal to the boundary, c^2 = R^2 + 1 with c = 0.3 + R.
  CircleFit f0 = circle_fit(planar_points(integrate_geodesic(ftau(0.0), x0, y0, 1.0, go)));
  EXPECT_NEAR(f0.center[0], 1.09 / 0.6, 1e-7);
  EXPECT_NEAR(f0.radius, 1.09 / 0.6 - 0.3, 1e-7);
  // tau = 1: internally tangent to the boundary, center -0.35 and radius 0.65.
  CircleFit f1 = circle_fit(planar_points(integrate_geodesic(ftau(1.0), x0, y0, 1.0, go)));
  EXPECT_NEAR(f1.center[0], -0.35, 1e-7);
  EXPECT_NEAR(f1.radius, 0.65, 1e-7);
  EXPECT_LE(unit_circle_tangency_gap(f1), 1e-7);
}
