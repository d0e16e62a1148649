#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "routhlab/errors.hpp"
#include "routhlab/homogenize.hpp"
#include "routhlab/lagrangian.hpp"
#include "routhlab/report.hpp"
#include "routhlab/spray.hpp"

namespace routhlab {

namespace detail {

// Position curve through trajectory samples: cubic Hermite segments when velocities are
// available (they are the exact time derivatives), straight chords otherwise. Positions are
// parametrized by arc length.
class ArcCurve {
 public:
  ArcCurve(const Trajectory& t, bool reversed) {
    const std::size_t N = t.size();
    for (std::size_t k = 0; k < N; ++k) {
      const std::size_t src = reversed ? N - 1 - k : k;
      x_.push_back(t.x[src]);
      const bool has_v = src < t.v.size() && t.v[src].size() == t.x[src].size();
      v_.push_back(has_v ? Vec((reversed ? -1.0 : 1.0) * t.v[src]) : Vec());
      times_.push_back(reversed ? -t.times[src] : t.times[src]);
    }
    hermite_ = N > 1 && std::all_of(v_.begin(), v_.end(), [](const Vec& v) { return v.size(); });
    cum_.assign(N, 0.0);
    for (std::size_t k = 0; k + 1 < N; ++k) cum_[k + 1] = cum_[k] + segment_length(k, 1.0);
  }

  double length() const { return cum_.empty() ? 0.0 : cum_.back(); }

  Vec at_length(double s) const {
    const std::size_t N = x_.size();
    if (N == 1) return x_[0];
    std::size_t k = static_cast<std::size_t>(
        std::upper_bound(cum_.begin(), cum_.end(), s) - cum_.begin());
    k = std::clamp<std::size_t>(k, 1, N - 1) - 1;
    const double seg = cum_[k + 1] - cum_[k];
    if (seg <= 0.0) return x_[k];
    const double target = s - cum_[k];
    double th = std::clamp(target / seg, 0.0, 1.0);
    if (hermite_) {
      for (int it = 0; it < 20; ++it) {
        const double g = segment_length(k, th) - target;
        const double speed = derivative(k, th).norm();
        if (speed <= 0.0) break;
        const double next = std::clamp(th - g / speed, 0.0, 1.0);
        const bool done = std::abs(next - th) < 1e-15;
        th = next;
        if (done) break;
      }
    }
    return position(k, th);
  }

 private:
  double dt(std::size_t k) const { return times_[k + 1] - times_[k]; }

  Vec position(std::size_t k, double th) const {
    if (!hermite_) return (1.0 - th) * x_[k] + th * x_[k + 1];
    const double h = dt(k);
    const double t2 = th * th, t3 = t2 * th;
    return (2 * t3 - 3 * t2 + 1) * x_[k] + (t3 - 2 * t2 + th) * h * v_[k] +
           (-2 * t3 + 3 * t2) * x_[k + 1] + (t3 - t2) * h * v_[k + 1];
  }

  // d position / d theta
  Vec derivative(std::size_t k, double th) const {
    if (!hermite_) return x_[k + 1] - x_[k];
    const double h = dt(k);
    const double t2 = th * th;
    return (6 * t2 - 6 * th) * x_[k] + (3 * t2 - 4 * th + 1) * h * v_[k] +
           (-6 * t2 + 6 * th) * x_[k + 1] + (3 * t2 - 2 * th) * h * v_[k + 1];
  }

  // Arc length over theta in [0, upto] by 8-point Gauss-Legendre quadrature.
  double segment_length(std::size_t k, double upto) const {
    if (!hermite_) return upto * (x_[k + 1] - x_[k]).norm();
    static constexpr std::array<double, 4> nodes = {0.1834346424956498, 0.5255324099163290,
                                                    0.7966664774136267, 0.9602898564975363};
    static constexpr std::array<double, 4> weights = {0.3626837833783620, 0.3137066458778873,
                                                      0.2223810344533745, 0.1012285362903763};
    double s = 0.0;
    for (int i = 0; i < 4; ++i) {
      for (double sign : {-1.0, 1.0}) {
        const double th = 0.5 * upto * (1.0 + sign * nodes[i]);
        s += weights[i] * derivative(k, th).norm();
      }
    }
    return 0.5 * upto * s;
  }

  std::vector<Vec> x_;
  std::vector<Vec> v_;
  std::vector<double> times_;
  std::vector<double> cum_;
  bool hermite_ = false;
};

inline double aligned_distance(const Trajectory& a, bool rev_a, const Trajectory& b, bool rev_b,
                               int samples) {
  const ArcCurve ca(a, rev_a);
  const ArcCurve cb(b, rev_b);
  const double len = std::min(ca.length(), cb.length());
  if (!(len >= 1e-12)) throw DegenerateCurve("curve length below 1e-12");
  double worst = 0.0;
  for (int j = 0; j < samples; ++j) {
    const double s = len * j / (samples - 1);
    worst = std::max(worst, (ca.at_length(s) - cb.at_length(s)).norm());
  }
  return worst;
}

}  // namespace detail

/// Distance between the position curves of two trajectories viewed as point sets.
///
/// Both curves are parametrized by arc length, truncated to the shorter length and compared at
/// `samples` common arc-length stations. When the start of one curve lies closer to the end of
/// the other, the curves are compared with opposite orientations (and the smaller of the two
/// possible reversals is returned, which keeps the result symmetric).
inline double point_set_distance(const Trajectory& t1, const Trajectory& t2, int samples = 1024) {
  if (t1.empty() || t2.empty()) throw PreconditionError("trajectories must be nonempty");
  if (t1.dim() != t2.dim()) throw PreconditionError("trajectory dimensions differ");
  const Vec& s1 = t1.x.front();
  const Vec& e1 = t1.x.back();
  const Vec& s2 = t2.x.front();
  const Vec& e2 = t2.x.back();
  const bool same = (s1 - s2).norm() <= std::min((s1 - e2).norm(), (e1 - s2).norm());
  if (same) return detail::aligned_distance(t1, false, t2, false, samples);
  return std::min(detail::aligned_distance(t1, false, t2, true, samples),
                  detail::aligned_distance(t1, true, t2, false, samples));
}

inline double arc_length(const Trajectory& t) {
  if (t.size() < 2) return 0.0;
  return detail::ArcCurve(t, false).length();
}

/// Rescales v0 along its ray so that E_L(x0, lambda v0) = e; lambda = 1 / iota0_e(x0, v0).
inline Vec rescale_to_energy(const LagrangianModel& L, const Vec& x0, const Vec& v0, double e) {
  const EnergySolveResult r = solve_iota0(L, e, x0, v0);
  return v0 / r.iota0;
}

struct TheoremCheckOptions {
  double tol = 1e-12;
  int samples = 2001;
  double distance_tol = 1e-6;
  double drift_tol = 1e-8;
  double energy_precondition_tol = 1e-10;
  /// Optional total-derivative gauge applied to F_e before integrating its geodesics.
  std::optional<CoordMap> gauge;
};

/// Executable check that EL solutions of L at energy e are geodesics of F_e:
///  (a) EL flow of L from (x0, v0);
///  (b) canonical geodesic of F_e from (x0, v0), compared with (a) as point sets;
///  (c) geodesic of the spray tangent to iota0_e = 1 from (x0, v0), compared with (a) pointwise
///      in time.
inline VerificationReport theorem_check(const LagrangianModel& L, double e, const Vec& x0,
                                        const Vec& v0, double t_end,
                                        const TheoremCheckOptions& opt = {}) {
  VerificationReport rep;
  rep.name = "theorem_check";
  double e0 = 0.0;
  try {
    e0 = energy(L, x0, v0);
  } catch (const Error& err) {
    rep.add_error("initial_energy", err.what());
    return rep;
  }
  rep.add_le("initial_energy_error", std::abs(e0 - e),
             opt.energy_precondition_tol * (1.0 + std::abs(e)));
  if (!rep.overall()) return rep;

  FinslerModel Fe = jacobi_finsler(L, e);
  if (opt.gauge) Fe = gauge_shift(Fe, *opt.gauge);
  const LevelFunction iota = iota0_level(L, e);

  IntegrateOptions io;
  io.tol = opt.tol;
  io.samples = opt.samples;

  Trajectory a;
  try {
    a = integrate_el(L, x0, v0, t_end, io);
    rep.add_le("el_energy_drift", a.max_log_drift(), opt.drift_tol);
  } catch (const Error& err) {
    rep.add_error("el_flow", err.what());
    return rep;
  }

  // (c) tangent-to-iota parametrization: identical to the EL flow in time.
  try {
    GeodesicOptions go;
    go.integrate = io;
    go.parametrization = Parametrization::TangentToLevel;
    go.level = iota;
    const Trajectory c = integrate_geodesic(Fe, x0, v0, t_end, go);
    double dist = 0.0;
    double iota_drift = 0.0;
    for (std::size_t k = 0; k < std::min(a.size(), c.size()); ++k) {
      dist = std::max(dist, (a.x[k] - c.x[k]).norm());
      iota_drift = std::max(iota_drift, std::abs(iota(c.x[k], c.v[k]).value - 1.0));
    }
    if (a.size() != c.size()) rep.add_flag("tangent_geodesic_complete", false);
    rep.add_le("tangent_geodesic_time_distance", dist, opt.distance_tol);
    rep.add_le("iota0_drift", iota_drift, opt.drift_tol);
  } catch (const Error& err) {
    rep.add_error("tangent_geodesic", err.what());
  }

  // (b) canonical parametrization: same point set.
  try {
    const double target = arc_length(a);
    GeodesicOptions go;
    go.integrate = io;
    go.integrate.samples = 0;
    double travelled = 0.0;
    Vec last = x0;
    go.integrate.stop = [&](double, const Vec& x, const Vec&) {
      travelled += (x - last).norm();
      last = x;
      return travelled >= target;
    };
    const Trajectory probe = integrate_geodesic(Fe, x0, v0, 1e3 * std::max(1.0, t_end), go);
    const double t_b = probe.times.back();
    go.integrate.stop = nullptr;
    // Arc-length speed varies along the canonical parametrization; sample it more densely.
    go.integrate.samples = 4 * opt.samples;
    const Trajectory b = integrate_geodesic(Fe, x0, v0, t_b, go);
    const double f0 = std::abs(b.energy_log.front());
    rep.add_le("canonical_F_drift", b.max_log_drift() / std::max(1.0, f0), opt.drift_tol);
    rep.add_le("canonical_geodesic_point_set_distance", point_set_distance(a, b),
               opt.distance_tol);
  } catch (const Error& err) {
    rep.add_error("canonical_geodesic", err.what());
  }
  return rep;
}

// ---------------------------------------------------------------------------------------------
// Planar circle tools.

struct CircleFit {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  /// +infinity when the points are collinear.
  double radius = 0.0;
  double rms_residual = 0.0;
  bool collinear = false;
  Eigen::Vector2d line_point = Eigen::Vector2d::Zero();
  Eigen::Vector2d line_direction = Eigen::Vector2d::Zero();
};

/// Algebraic (Kasa) least-squares circle refined by Gauss-Newton on orthogonal distances.
/// Collinear input (smallest singular value of the design matrix below 1e-10 of the largest)
/// returns an infinite radius together with the fitted line.
inline CircleFit circle_fit(const std::vector<Eigen::Vector2d>& points) {
  const int m = static_cast<int>(points.size());
  if (m < 3) throw PreconditionError("circle fit needs at least 3 points");
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : points) mean += p;
  mean /= m;
  double scale = 0.0;
  for (const auto& p : points) scale += (p - mean).squaredNorm();
  scale = std::sqrt(scale / m);
  if (!(scale > 0.0)) throw DegenerateCurve("all points coincide");

  Mat A(m, 3);
  Vec b(m);
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (int i = 0; i < m; ++i) {
    const Eigen::Vector2d q = (points[i] - mean) / scale;
    A.row(i) << q.x(), q.y(), 1.0;
    b[i] = -q.squaredNorm();
    cov += q * q.transpose();
  }
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto sv = svd.singularValues();
  CircleFit fit;
  if (sv.minCoeff() < 1e-10 * sv.maxCoeff()) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
    const Eigen::Vector2d dir = es.eigenvectors().col(1);
    const Eigen::Vector2d normal(-dir.y(), dir.x());
    double ss = 0.0;
    for (const auto& p : points) ss += std::pow(normal.dot(p - mean), 2);
    fit.collinear = true;
    fit.radius = std::numeric_limits<double>::infinity();
    fit.line_point = mean;
    fit.line_direction = dir;
    fit.rms_residual = std::sqrt(ss / m);
    return fit;
  }
  const Vec sol = svd.solve(b);
  Eigen::Vector2d c(-0.5 * sol[0], -0.5 * sol[1]);
  double r = std::sqrt(std::max(0.0, c.squaredNorm() - sol[2]));

  for (int it = 0; it < 50; ++it) {
    Eigen::MatrixX3d J(m, 3);
    Vec res(m);
    for (int i = 0; i < m; ++i) {
      const Eigen::Vector2d q = (points[i] - mean) / scale;
      const Eigen::Vector2d d = q - c;
      const double dn = d.norm();
      res[i] = dn - r;
      J.row(i) << -d.x() / dn, -d.y() / dn, -1.0;
    }
    const Eigen::Vector3d delta = J.colPivHouseholderQr().solve(-res);
    c += delta.head<2>();
    r += delta[2];
    if (delta.norm() < 1e-15 * (1.0 + r)) break;
  }
  double ss = 0.0;
  for (const auto& p : points) {
    const Eigen::Vector2d q = (p - mean) / scale;
    ss += std::pow((q - c).norm() - r, 2);
  }
  fit.center = mean + scale * c;
  fit.radius = scale * r;
  fit.rms_residual = scale * std::sqrt(ss / m);
  return fit;
}

inline std::vector<Eigen::Vector2d> planar_points(const Trajectory& t) {
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(t.size());
  for (const Vec& x : t.x) {
    if (x.size() != 2) throw PreconditionError("planar trajectory expected");
    pts.emplace_back(x[0], x[1]);
  }
  return pts;
}

/// Angle (degrees, in [0, 90]) at which a fitted circle or line meets the unit circle.
/// Circles that miss the unit circle by more than 1e-6 raise NoIntersection; near-tangent
/// circles within that slack report 0 degrees.
inline double boundary_angle(const CircleFit& circle) {
  constexpr double kRadToDeg = 57.295779513082320876798;
  if (circle.collinear || !std::isfinite(circle.radius)) {
    const Eigen::Vector2d p = circle.line_point;
    const Eigen::Vector2d u = circle.line_direction.normalized();
    const double dist = std::abs(p.x() * u.y() - p.y() * u.x());
    if (dist > 1.0 + 1e-6) throw NoIntersection("line misses the unit circle");
    return std::acos(std::min(1.0, dist)) * kRadToDeg;
  }
  const double R = circle.radius;
  const double d = circle.center.norm();
  double c = (1.0 + R * R - d * d) / (2.0 * R);
  if (std::abs(c) > 1.0) {
    const double gap = std::min(std::abs(d - std::abs(1.0 - R)), std::abs(d - (1.0 + R)));
    if (gap > 1e-6 || d == 0.0) throw NoIntersection("circle does not meet the unit circle");
    c = c > 0.0 ? 1.0 : -1.0;
  }
  return std::acos(std::abs(c)) * kRadToDeg;
}

inline double boundary_angle(const Eigen::Vector2d& center, double radius) {
  CircleFit c;
  c.center = center;
  c.radius = radius;
  return boundary_angle(c);
}

/// Distance from exact tangency with the unit circle (internal or external).
inline double unit_circle_tangency_gap(const CircleFit& circle) {
  const double R = circle.radius;
  const double d = circle.center.norm();
  return std::min(std::abs(d - std::abs(1.0 - R)), std::abs(d - (1.0 + R)));
}

struct FtauCheckOptions {
  double tol = 1e-12;
  int samples = 2001;
  double circle_tol = 1e-6;
  double angle_tol_deg = 0.1;
  double contact_tol = 1e-4;
  double distance_tol = 1e-6;
};

/// Checks on one geodesic of F_tau from (x0, y0) over [0, t_end]: the curve is a circle (or a
/// line), it meets the unit circle at 90 degrees for tau = 0 and is tangent to it for tau = 1,
/// and for tau > 0 it coincides as a point set with the EL flow of the Poincare-disk magnetic
/// Lagrangian at energy 1 / tau^2.
inline VerificationReport ftau_geodesic_check(double tau, const Vec& x0, const Vec& y0,
                                              double t_end, const FtauCheckOptions& opt = {}) {
  VerificationReport rep;
  rep.name = "ftau_geodesic";
  const FinslerModel F = ftau(tau);
  GeodesicOptions go;
  go.integrate.tol = opt.tol;
  go.integrate.samples = opt.samples;
  Trajectory g;
  try {
    g = integrate_geodesic(F, x0, y0, t_end, go);
  } catch (const Error& err) {
    rep.add_error("geodesic", err.what());
    return rep;
  }
  const CircleFit fit = circle_fit(planar_points(g));
  if (fit.collinear) {
    rep.add_le("line_rms_residual", fit.rms_residual, opt.circle_tol);
  } else {
    rep.add_le("circle_rms_over_radius", fit.rms_residual / fit.radius, opt.circle_tol);
  }
  if (tau == 0.0 || tau == 1.0) {
    try {
      const double angle = boundary_angle(fit);
      if (tau == 0.0) {
        rep.add_le("boundary_angle_error_deg", std::abs(angle - 90.0), opt.angle_tol_deg);
      } else {
        rep.add_le("boundary_angle_deg", angle, opt.angle_tol_deg);
        rep.add_le("contact_distance", unit_circle_tangency_gap(fit), opt.contact_tol);
      }
    } catch (const Error& err) {
      rep.add_error("boundary_angle", err.what());
    }
  }
  if (tau > 0.0) {
    try {
      const LagrangianModel L = poincare_magnetic();
      const double e = 1.0 / (tau * tau);
      const Vec v0 = rescale_to_energy(L, x0, y0, e);
      const double target = arc_length(g);
      IntegrateOptions io;
      io.tol = opt.tol;
      io.samples = 0;
      double travelled = 0.0;
      Vec last = x0;
      io.stop = [&](double, const Vec& x, const Vec&) {
        travelled += (x - last).norm();
        last = x;
        return travelled >= target;
      };
      const Trajectory probe = integrate_el(L, x0, v0, 1e3 * std::max(1.0, t_end), io);
      io.stop = nullptr;
      io.samples = 4 * opt.samples;
      const Trajectory a = integrate_el(L, x0, v0, probe.times.back(), io);
      rep.add_le("el_energy_drift", a.max_log_drift() / std::max(1.0, e), 1e-8);
      rep.add_le("el_vs_geodesic_point_set_distance", point_set_distance(a, g), opt.distance_tol);
    } catch (const Error& err) {
      rep.add_error("el_comparison", err.what());
    }
  }
  return rep;
}

}  // namespace routhlab
