#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "routhlab/calculus.hpp"
#include "routhlab/homogenize.hpp"
#include "routhlab/lagrangian.hpp"
#include "routhlab/report.hpp"
#include "routhlab/spray.hpp"

namespace routhlab {

// Sampled property suites. Each returns one aggregated metric per property (worst value over the
// samples) plus a count of points that could not be evaluated.

using StateSamples = std::vector<std::pair<Vec, Vec>>;

namespace detail {

class Worst {
 public:
  void update(double v) { worst_ = std::max(worst_, v); }
  void skip() { ++skipped_; }
  void evaluated() { ++evaluated_; }
  double value() const { return worst_; }
  int skipped() const { return skipped_; }
  int evaluated_count() const { return evaluated_; }
  std::string note() const {
    return std::to_string(evaluated_) + " points, " + std::to_string(skipped_) + " skipped";
  }

 private:
  double worst_ = 0.0;
  int skipped_ = 0;
  int evaluated_ = 0;
};

inline void add_worst(VerificationReport& rep, const std::string& label, const Worst& w,
                      double tol) {
  if (w.evaluated_count() == 0) {
    rep.add_error(label, "no sample point could be evaluated");
    return;
  }
  rep.add_le(label, w.value(), tol, w.note());
}

}  // namespace detail

/// Autodiff jet against the finite-difference oracle (componentwise relative).
inline VerificationReport suite_autodiff(const ScalarField& f, const StateSamples& states,
                                         double tol = 1e-6) {
  VerificationReport rep;
  rep.name = "autodiff_vs_fd";
  detail::Worst w;
  for (const auto& [x, y] : states) {
    try {
      const SecondJet a = jet(f, x, y);
      const SecondJet b = fd_jet(f, x, y);
      w.update(jet_discrepancy(a, b));
      w.evaluated();
    } catch (const DomainError&) {
      w.skip();
    }
  }
  detail::add_worst(rep, "max_jet_discrepancy", w, tol);
  return rep;
}

/// Euler identity sum y^a dF/dy^a = F and F(x, 2y) = 2 F(x, y) for a 1-homogeneous model.
inline VerificationReport suite_euler_homogeneity(const FinslerModel& F,
                                                  const StateSamples& states,
                                                  double tol = 1e-10) {
  VerificationReport rep;
  rep.name = "euler_homogeneity";
  detail::Worst euler, scaling;
  for (const auto& [x, y] : states) {
    try {
      const SecondJet j = F.jet(x, y);
      euler.update(rel_diff(y.dot(j.d_y), j.value));
      euler.evaluated();
      scaling.update(rel_diff(F.value(x, 2.0 * y), 2.0 * j.value));
      scaling.evaluated();
    } catch (const NumericalError&) {
      euler.skip();
    }
  }
  detail::add_worst(rep, "euler_identity", euler, tol);
  detail::add_worst(rep, "scaling_identity", scaling, tol);
  return rep;
}

/// Spray coefficients are 2-homogeneous: accel(x, 2y) = 4 accel(x, y).
inline VerificationReport suite_spray_homogeneity(const FinslerModel& F,
                                                  const StateSamples& states,
                                                  double tol = 1e-8) {
  VerificationReport rep;
  rep.name = "spray_homogeneity";
  detail::Worst w;
  for (const auto& [x, y] : states) {
    try {
      const Vec a1 = canonical_spray(F, x, y).accel;
      const Vec a2 = canonical_spray(F, x, 2.0 * y).accel;
      const double scale = std::max(1.0, 4.0 * a1.norm());
      w.update((a2 - 4.0 * a1).norm() / scale);
      w.evaluated();
    } catch (const NumericalError&) {
      w.skip();
    }
  }
  detail::add_worst(rep, "spray_2_homogeneity", w, tol);
  return rep;
}

/// Positive quasi-definiteness of the fibre Hessian at every sample.
inline VerificationReport suite_quasi_definite(const FinslerModel& F, const StateSamples& states,
                                               int directions = 16) {
  VerificationReport rep;
  rep.name = "quasi_definite";
  double min_q = std::numeric_limits<double>::infinity();
  double min_transverse = std::numeric_limits<double>::infinity();
  detail::Worst kernel, along_y;
  std::uint64_t seed = 1;
  for (const auto& [x, y] : states) {
    try {
      const VerificationReport r = quasi_definite_check(F, x, y, directions, seed++);
      min_q = std::min(min_q, r.find("min_quadratic_form")->value);
      kernel.update(r.find("kernel_residual")->value);
      along_y.update(r.find("quadratic_form_along_y")->value);
      if (const Metric* m = r.find("min_transverse_eigenvalue"))
        min_transverse = std::min(min_transverse, m->value);
      kernel.evaluated();
      along_y.evaluated();
    } catch (const NumericalError&) {
      kernel.skip();
    }
  }
  if (kernel.evaluated_count() == 0) {
    rep.add_error("quasi_definite", "no sample point could be evaluated");
    return rep;
  }
  rep.add_ge("min_quadratic_form", min_q, -1e-12, kernel.note());
  detail::add_worst(rep, "kernel_residual", kernel, 1e-10);
  detail::add_worst(rep, "quadratic_form_along_y", along_y, 1e-12);
  if (std::isfinite(min_transverse)) rep.add_ge("min_transverse_eigenvalue", min_transverse, 0.0);
  return rep;
}

/// Numeric F_e against a closed form (relative).
inline VerificationReport suite_closed_form(const FinslerModel& numeric,
                                            const FinslerModel& closed,
                                            const StateSamples& states, double tol = 1e-10) {
  VerificationReport rep;
  rep.name = std::string("closed_form_") + provenance_name(closed.provenance());
  detail::Worst w;
  for (const auto& [x, y] : states) {
    double a = 0.0, b = 0.0;
    bool ok_a = true, ok_b = true;
    try {
      a = numeric.value(x, y);
    } catch (const NumericalError&) {
      ok_a = false;
    }
    try {
      b = closed.value(x, y);
    } catch (const NumericalError&) {
      ok_b = false;
    }
    if (ok_a != ok_b) {
      rep.add_flag("same_domain", false, "numeric and closed form disagree on evaluability");
      return rep;
    }
    if (!ok_a) {
      w.skip();
      continue;
    }
    w.update(std::abs(a - b) / std::max(std::abs(b), 1e-300));
    w.evaluated();
  }
  detail::add_worst(rep, "max_relative_error", w, tol);
  return rep;
}

/// Sampled positivity of the Randers form at `positions` compared with the global criterion.
/// Positivity is probed along random unit directions and along the direction -g^{-1} beta, where
/// the form is smallest.
inline VerificationReport suite_randers_global(const MagneticCoefficients& c, double e,
                                               const std::vector<Vec>& positions,
                                               std::uint64_t seed = 1, int directions = 16) {
  VerificationReport rep;
  rep.name = "randers_global";
  const GlobalCriterion crit = randers_global_criterion(c, e, positions);
  const FinslerModel F = randers_closed_form(c, e);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  bool positive = true;
  for (const Vec& x : positions) {
    std::vector<Vec> ys;
    const Mat g = c.metric_at(x);
    const Vec b = c.one_form_at(x);
    if (b.norm() > 0.0) ys.push_back(-g.llt().solve(b));
    for (int k = 0; k < directions; ++k) {
      Vec y(x.size());
      for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = nd(rng);
      ys.push_back(y);
    }
    for (const Vec& y : ys) {
      try {
        if (!(F.value(x, y) > 0.0)) positive = false;
      } catch (const NumericalError&) {
        positive = false;
      }
    }
  }
  rep.add_flag("criterion_matches_positivity", crit.is_global == positive,
               std::string("criterion ") + (crit.is_global ? "global" : "not global") +
                   ", sampled positivity " + (positive ? "holds" : "fails"));
  rep.metrics.back().value = crit.margin;
  return rep;
}

/// Energy drift of the EL flow from each sampled state.
inline VerificationReport suite_energy_conservation(const LagrangianModel& L,
                                                   const StateSamples& states, double t_end,
                                                   double tol = 1e-10, double drift = 1e-8) {
  VerificationReport rep;
  rep.name = "energy_conservation";
  detail::Worst w;
  IntegrateOptions io;
  io.tol = tol;
  io.samples = 201;
  for (const auto& [x, v] : states) {
    try {
      const Trajectory t = integrate_el(L, x, v, t_end, io);
      w.update(t.max_log_drift() / std::max(1.0, std::abs(t.energy_log.front())));
      w.evaluated();
    } catch (const Error&) {
      w.skip();
    }
  }
  detail::add_worst(rep, "max_energy_drift", w, drift);
  return rep;
}

/// F drift along canonical geodesics from each sampled state.
inline VerificationReport suite_geodesic_conservation(const FinslerModel& F,
                                                     const StateSamples& states, double t_end,
                                                     double tol = 1e-10, double drift = 1e-8) {
  VerificationReport rep;
  rep.name = "geodesic_conservation";
  detail::Worst w;
  GeodesicOptions go;
  go.integrate.tol = tol;
  go.integrate.samples = 201;
  for (const auto& [x, y] : states) {
    try {
      const Trajectory t = integrate_geodesic(F, x, y, t_end, go);
      w.update(t.max_log_drift() / std::max(1.0, std::abs(t.energy_log.front())));
      w.evaluated();
    } catch (const Error&) {
      w.skip();
    }
  }
  detail::add_worst(rep, "max_F_drift", w, drift);
  return rep;
}

}  // namespace routhlab
