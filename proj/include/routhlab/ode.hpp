#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "routhlab/errors.hpp"
#include "routhlab/linalg.hpp"

namespace routhlab {

struct IntegratorStats {
  int steps = 0;
  int rejected = 0;
  int evaluations = 0;
  double tolerance = 0.0;
};

/// Time-stamped states (x, v) of a second-order system together with the logged conserved
/// quantity (E_L for Euler-Lagrange flows, F for geodesics).
struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> x;
  std::vector<Vec> v;
  std::vector<double> energy_log;
  std::string log_label = "E_L";
  IntegratorStats stats;
  std::vector<std::string> warnings;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }
  int dim() const { return x.empty() ? 0 : static_cast<int>(x.front().size()); }

  void push(double t, Vec xs, Vec vs, double logged) {
    times.push_back(t);
    x.push_back(std::move(xs));
    v.push_back(std::move(vs));
    energy_log.push_back(logged);
  }

  double max_log_drift() const {
    double d = 0.0;
    for (double e : energy_log) d = std::max(d, std::abs(e - energy_log.front()));
    return d;
  }
};

struct OdeOptions {
  double rtol = 1e-11;
  double atol = 1e-11;
  /// Uniform dense-output grid over [0, t_end] when > 1; otherwise every accepted step.
  int samples = 0;
  /// Explicit output times (sorted, within [0, t_end]); takes precedence over `samples`.
  std::vector<double> sample_times;
  int max_steps = 2'000'000;
  /// Minimum step relative to max(1, t_end); smaller steps raise StepFailure.
  double min_step = 1e-14;
  /// Checked after each accepted step; returning a message aborts with StepFailure.
  std::function<std::string(const Vec& x, const Vec& v)> guard;
  /// Checked after each accepted step; returning true ends the integration early.
  std::function<bool(double t, const Vec& x, const Vec& v)> stop;
};

using AccelFn = std::function<Vec(const Vec& x, const Vec& v)>;
using LogFn = std::function<double(const Vec& x, const Vec& v)>;

namespace detail {

// Dormand-Prince 5(4) tableau with Hairer's continuous extension.
struct Dopri5 {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                          a75 = -2187.0 / 6784, a76 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                          d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                          d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
};

struct DenseStep {
  double t0 = 0.0;
  double h = 0.0;
  Vec r1, r2, r3, r4, r5;

  Vec at(double t) const {
    const double th = (t - t0) / h;
    const double th1 = 1.0 - th;
    return r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
  }
};

}  // namespace detail

/// Adaptive Dormand-Prince 5(4) integration of x' = v, v' = accel(x, v) with PI step control
/// and dense output. DomainError raised inside a trial step shrinks the step; persistent
/// failure raises StepFailure.
inline Trajectory integrate_second_order(const AccelFn& accel, const Vec& x0, const Vec& v0,
                                         double t_end, const OdeOptions& opt,
                                         const LogFn& log = {}) {
  using C = detail::Dopri5;
  const Eigen::Index n = x0.size();
  if (v0.size() != n) throw PreconditionError("x0 and v0 dimensions differ");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw PreconditionError("t_end must be >= 0");

  Trajectory traj;
  traj.stats.tolerance = opt.rtol;
  auto logged = [&log](const Vec& x, const Vec& v) { return log ? log(x, v) : 0.0; };

  std::vector<double> outs = opt.sample_times;
  if (outs.empty() && opt.samples > 1) {
    outs.resize(opt.samples);
    for (int i = 0; i < opt.samples; ++i) outs[i] = t_end * i / (opt.samples - 1);
  }
  const bool dense = !outs.empty();
  std::size_t next_out = 0;

  auto f = [&](const Vec& y) {
    ++traj.stats.evaluations;
    Vec dy(2 * n);
    dy.head(n) = y.tail(n);
    dy.tail(n) = accel(y.head(n), y.tail(n));
    return dy;
  };

  Vec y(2 * n);
  y << x0, v0;
  Vec k1 = f(y);  // initial point must be valid: DomainError propagates

  if (dense) {
    while (next_out < outs.size() && outs[next_out] <= 0.0) {
      traj.push(outs[next_out], x0, v0, logged(x0, v0));
      ++next_out;
    }
  } else {
    traj.push(0.0, x0, v0, logged(x0, v0));
  }
  if (t_end == 0.0) return traj;

  auto err_norm = [&](const Vec& e, const Vec& ya, const Vec& yb) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < e.size(); ++i) {
      const double sc = opt.atol + opt.rtol * std::max(std::abs(ya[i]), std::abs(yb[i]));
      s += (e[i] / sc) * (e[i] / sc);
    }
    return std::sqrt(s / static_cast<double>(e.size()));
  };

  // Initial step guess (Hairer, Norsett & Wanner, II.4).
  double h;
  {
    const Vec zero = Vec::Zero(2 * n);
    const double d0 = err_norm(y, y, zero) * 1.0;
    const double d1 = err_norm(k1, y, zero);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, t_end);
    double h1 = h0;
    try {
      const Vec k2 = f(y + h0 * k1);
      const double d2 = err_norm(k2 - k1, y, zero) / h0;
      const double dm = std::max(d1, d2);
      h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
    } catch (const DomainError&) {
      h1 = h0 * 1e-2;
    }
    h = std::min({100.0 * h0, h1, t_end});
  }

  const double hmin = opt.min_step * std::max(1.0, t_end);
  double t = 0.0;
  double facold = 1e-4;
  constexpr double beta = 0.04, expo1 = 0.2 - beta * 0.75, safe = 0.9;
  constexpr double facc1 = 1.0 / 0.2, facc2 = 1.0 / 10.0;
  bool last_rejected = false;

  while (t < t_end) {
    if (traj.stats.steps + traj.stats.rejected >= opt.max_steps)
      throw StepFailure("maximum number of steps exceeded at t=" + std::to_string(t));
    if (h < hmin) throw StepFailure("step size underflow at t=" + std::to_string(t));
    if (t + 1.01 * h >= t_end) h = t_end - t;

    Vec k2, k3, k4, k5, k6, k7, y1;
    bool domain_fail = false;
    try {
      k2 = f(y + h * C::a21 * k1);
      k3 = f(y + h * (C::a31 * k1 + C::a32 * k2));
      k4 = f(y + h * (C::a41 * k1 + C::a42 * k2 + C::a43 * k3));
      k5 = f(y + h * (C::a51 * k1 + C::a52 * k2 + C::a53 * k3 + C::a54 * k4));
      k6 = f(y + h * (C::a61 * k1 + C::a62 * k2 + C::a63 * k3 + C::a64 * k4 + C::a65 * k5));
      y1 = y + h * (C::a71 * k1 + C::a73 * k3 + C::a74 * k4 + C::a75 * k5 + C::a76 * k6);
      k7 = f(y1);
    } catch (const DomainError&) {
      domain_fail = true;
    }
    if (domain_fail) {
      ++traj.stats.rejected;
      h *= 0.25;
      last_rejected = true;
      continue;
    }

    const Vec e = h * (C::e1 * k1 + C::e3 * k3 + C::e4 * k4 + C::e5 * k5 + C::e6 * k6 +
                       C::e7 * k7);
    const double err = err_norm(e, y, y1);
    if (!std::isfinite(err)) {
      ++traj.stats.rejected;
      h *= 0.25;
      last_rejected = true;
      continue;
    }
    const double fac11 = std::pow(err, expo1);
    if (err <= 1.0) {
      double fac = fac11 / std::pow(facold, beta);
      fac = std::max(facc2, std::min(facc1, fac / safe));
      double hnew = h / fac;
      facold = std::max(err, 1e-4);
      if (last_rejected) hnew = std::min(hnew, h);

      detail::DenseStep ds;
      if (dense) {
        ds.t0 = t;
        ds.h = h;
        const Vec ydiff = y1 - y;
        const Vec bspl = h * k1 - ydiff;
        ds.r1 = y;
        ds.r2 = ydiff;
        ds.r3 = bspl;
        ds.r4 = ydiff - h * k7 - bspl;
        ds.r5 = h * (C::d1 * k1 + C::d3 * k3 + C::d4 * k4 + C::d5 * k5 + C::d6 * k6 +
                     C::d7 * k7);
      }
      const double t1 = (h == t_end - t) ? t_end : t + h;
      ++traj.stats.steps;

      const Vec x1 = y1.head(n);
      const Vec v1 = y1.tail(n);
      if (opt.guard) {
        const std::string msg = opt.guard(x1, v1);
        if (!msg.empty()) throw StepFailure(msg + " at t=" + std::to_string(t1));
      }
      const bool stopping = opt.stop && opt.stop(t1, x1, v1);

      if (dense) {
        while (next_out < outs.size() && outs[next_out] <= t1) {
          const Vec ys = outs[next_out] == t1 ? y1 : ds.at(outs[next_out]);
          traj.push(outs[next_out], ys.head(n), ys.tail(n), logged(ys.head(n), ys.tail(n)));
          ++next_out;
        }
        if (stopping && (traj.empty() || traj.times.back() < t1))
          traj.push(t1, x1, v1, logged(x1, v1));
      } else {
        traj.push(t1, x1, v1, logged(x1, v1));
      }

      y = y1;
      k1 = k7;
      t = t1;
      h = hnew;
      last_rejected = false;
      if (stopping) break;
    } else {
      ++traj.stats.rejected;
      h /= std::min(facc1, fac11 / safe);
      last_rejected = true;
    }
  }
  return traj;
}

}  // namespace routhlab
