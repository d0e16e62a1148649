#pragma once

#include <cmath>
#include <string>

#include "routhlab/errors.hpp"
#include "routhlab/homogenize.hpp"
#include "routhlab/lagrangian.hpp"
#include "routhlab/ode.hpp"

namespace routhlab {

/// Fibre components f^a of a second-order field at (x, y).
struct SprayCoefficients {
  Vec accel;
};

/// Canonical spray from a jet of F: the Euler-Lagrange acceleration of E = F^2 / 2.
inline Vec canonical_spray_accel(const SecondJet& F, const Vec& y) {
  const double f = F.value;
  const Mat e_yy = F.d_y * F.d_y.transpose() + f * F.d_yy;
  const Vec e_x = f * F.d_x;
  const Mat e_xy = F.d_x * F.d_y.transpose() + f * F.d_xy;
  return solve_symmetric(e_yy, e_x - e_xy.transpose() * y, "Hessian of F^2/2");
}

inline SprayCoefficients canonical_spray(const FinslerModel& F, const Vec& x, const Vec& y) {
  return {canonical_spray_accel(F.jet(x, y), y)};
}

/// accel + P y with P = -Gamma_E(iota) / iota, the member of the projective class that is
/// tangent to the level sets of the 1-homogeneous function iota.
inline SprayCoefficients projective_shift(const FinslerModel& F, const LevelFunction& iota,
                                          const Vec& x, const Vec& y) {
  const Vec a = canonical_spray(F, x, y).accel;
  const FirstJet l = iota(x, y);
  if (std::abs(l.value) < 1e-14) throw DomainError("level function vanishes");
  const double gamma_iota = y.dot(l.d_x) + a.dot(l.d_y);
  const double P = -gamma_iota / l.value;
  return {a + P * y};
}

enum class Parametrization { Canonical, TangentToLevel };

struct GeodesicOptions {
  IntegrateOptions integrate;
  Parametrization parametrization = Parametrization::Canonical;
  /// Required for TangentToLevel.
  LevelFunction level;
  /// Abort when |y| drops below slit_floor * |y0|.
  double slit_floor = 1e-10;
};

/// Geodesic of F from (x0, y0). For TangentToLevel, y0 is first rescaled so that
/// level(x0, y0) = 1. F is logged along the curve.
inline Trajectory integrate_geodesic(const FinslerModel& F, const Vec& x0, const Vec& y0,
                                     double t_end, const GeodesicOptions& opt = {}) {
  if (y0.squaredNorm() == 0.0) throw PreconditionError("initial vector must be nonzero");
  Vec v0 = y0;
  AccelFn accel;
  if (opt.parametrization == Parametrization::TangentToLevel) {
    if (!opt.level) throw PreconditionError("tangent parametrization needs a level function");
    const double l0 = opt.level(x0, y0).value;
    if (!(l0 > 0.0)) throw PreconditionError("level function must be positive at the start");
    v0 = y0 / l0;
    accel = [&F, &opt](const Vec& x, const Vec& y) {
      return projective_shift(F, opt.level, x, y).accel;
    };
  } else {
    accel = [&F](const Vec& x, const Vec& y) { return canonical_spray(F, x, y).accel; };
  }
  OdeOptions ode = to_ode_options(opt.integrate);
  const double floor = opt.slit_floor * v0.norm();
  ode.guard = [&F, floor](const Vec& x, const Vec& y) {
    if (!F.in_domain(x)) return std::string("left the Finsler model domain");
    if (y.norm() < floor) return std::string("velocity approached the zero section");
    return std::string();
  };
  auto log = [&F](const Vec& x, const Vec& y) { return F.value(x, y); };
  Trajectory t = integrate_second_order(accel, x0, v0, t_end, ode, log);
  t.log_label = "F";
  return t;
}

}  // namespace routhlab
