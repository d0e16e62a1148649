#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "routhlab/calculus.hpp"
#include "routhlab/errors.hpp"
#include "routhlab/expression.hpp"
#include "routhlab/ode.hpp"

namespace routhlab {

enum class Family {
  SimpleMechanical,
  Magnetic,
  KHomogeneous,
  PoincareMagnetic,
  CustomExpression,
  Routhian,
};

inline const char* family_name(Family f) {
  switch (f) {
    case Family::SimpleMechanical: return "simple";
    case Family::Magnetic: return "magnetic";
    case Family::KHomogeneous: return "k_homogeneous";
    case Family::PoincareMagnetic: return "poincare_magnetic";
    case Family::CustomExpression: return "expression";
    case Family::Routhian: return "routhian";
  }
  return "unknown";
}

/// Metric g (n*n outputs, row major), one-form beta (n outputs) and potential V (1 output) of
/// L = 1/2 g(v, v) + beta(v) - V. beta is invalid for simple mechanical Lagrangians.
struct MagneticCoefficients {
  CoordMap metric;
  CoordMap one_form;
  CoordMap potential;

  int dim() const { return metric.dim(); }

  Mat metric_at(const Vec& x) const {
    const int n = dim();
    const auto g = metric.at(x);
    Mat m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = g[i * n + j];
    return m;
  }

  Vec one_form_at(const Vec& x) const {
    if (!one_form.valid()) return Vec::Zero(dim());
    const auto b = one_form.at(x);
    return Eigen::Map<const Vec>(b.data(), dim());
  }

  double potential_at(const Vec& x) const {
    return potential.valid() ? potential.at(x)[0] : 0.0;
  }
};

/// Predicate on positions; DomainError is raised outside it.
using PositionDomain = std::function<bool(const Vec& x)>;

/// A Lagrangian L(x, v) together with its family metadata.
class LagrangianModel {
 public:
  LagrangianModel() = default;
  LagrangianModel(Family family, ScalarField field, std::string description,
                  PositionDomain domain = {})
      : family_(family),
        field_(std::move(field)),
        description_(std::move(description)),
        domain_(std::move(domain)) {}

  Family family() const { return family_; }
  int dim() const { return field_.dim(); }
  const std::string& description() const { return description_; }
  const ScalarField& field() const { return field_; }

  bool in_domain(const Vec& x) const { return !domain_ || domain_(x); }
  const PositionDomain& domain() const { return domain_; }

  double value(const Vec& x, const Vec& v) const {
    require_domain(x);
    return field_.value(x, v);
  }

  SecondJet jet(const Vec& x, const Vec& v) const {
    require_domain(x);
    return routhlab::jet(field_, x, v);
  }

  /// Degree k for KHomogeneous models, 0 otherwise.
  double degree() const { return degree_; }
  const std::shared_ptr<const MagneticCoefficients>& coefficients() const { return coeffs_; }

  LagrangianModel& with_degree(double k) {
    degree_ = k;
    return *this;
  }
  LagrangianModel& with_coefficients(std::shared_ptr<const MagneticCoefficients> c) {
    coeffs_ = std::move(c);
    return *this;
  }
  LagrangianModel& with_domain_text(std::string text) {
    domain_text_ = std::move(text);
    return *this;
  }
  const std::string& domain_text() const { return domain_text_; }

 private:
  void require_domain(const Vec& x) const {
    if (domain_ && !domain_(x)) throw DomainError("position outside the model domain");
  }

  Family family_ = Family::CustomExpression;
  ScalarField field_;
  std::string description_;
  PositionDomain domain_;
  double degree_ = 0.0;
  std::shared_ptr<const MagneticCoefficients> coeffs_;
  std::string domain_text_;
};

namespace detail {

template <class T>
void check_metric_pd(std::span<const T> g, int n) {
  Mat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = value_of(g[i * n + j]);
  if (!m.isApprox(m.transpose(), 1e-12) || !is_positive_definite(m))
    throw DomainError("metric is not symmetric positive-definite");
}

}  // namespace detail

/// L = 1/2 g_ij v^i v^j + beta_i v^i - V. Used for both SimpleMechanical and Magnetic families.
inline LagrangianModel magnetic(MagneticCoefficients coeffs, PositionDomain domain = {}) {
  const int n = coeffs.dim();
  const bool has_beta = coeffs.one_form.valid();
  auto c = std::make_shared<const MagneticCoefficients>(std::move(coeffs));
  auto fn = [c, n, has_beta](auto x, auto v) {
    using T = typename decltype(x)::value_type;
    const auto g = c->metric(x);
    detail::check_metric_pd<T>(std::span<const T>(g), n);
    T kinetic(0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) kinetic += g[i * n + j] * v[i] * v[j];
    T L = 0.5 * kinetic;
    if (has_beta) {
      const auto b = c->one_form(x);
      for (int i = 0; i < n; ++i) L += b[i] * v[i];
    }
    if (c->potential.valid()) L -= c->potential(x)[0];
    return L;
  };
  const Family fam = has_beta ? Family::Magnetic : Family::SimpleMechanical;
  LagrangianModel m(fam, make_ad_field(n, fn, family_name(fam)),
                    has_beta ? "1/2 g(v,v) + beta(v) - V" : "1/2 g(v,v) - V", std::move(domain));
  m.with_coefficients(std::move(c));
  return m;
}

inline LagrangianModel simple_mechanical(CoordMap metric, CoordMap potential,
                                         PositionDomain domain = {}) {
  return magnetic({std::move(metric), CoordMap{}, std::move(potential)}, std::move(domain));
}

inline CoordMap euclidean_metric(int n) {
  std::vector<double> id(n * n, 0.0);
  for (int i = 0; i < n; ++i) id[i * n + i] = 1.0;
  return CoordMap::constant(n, std::move(id));
}

/// g_ij = phi(x) delta_ij for a positive scalar map phi.
inline CoordMap conformal_metric(CoordMap factor) {
  const int n = factor.dim();
  return CoordMap::make(n, n * n, [factor, n](auto x, auto out) {
    using T = typename decltype(out)::value_type;
    const auto phi = factor(x);
    for (int i = 0; i < n * n; ++i) out[i] = T(0.0);
    for (int i = 0; i < n; ++i) out[i * n + i] = phi[0];
  });
}

/// The two-dimensional magnetic Lagrangian on the open unit disk
///   L = (v1^2 + v2^2) / (16 (1 - |x|^2)^2) + (x2 v1 - x1 v2) / (2 (1 - |x|^2)),
/// i.e. g = I / (8 s^2), beta = (x2, -x1) / (2 s), V = 0 with s = 1 - |x|^2.
inline LagrangianModel poincare_magnetic() {
  auto disk = [](const Vec& x) { return x.squaredNorm() < 1.0; };
  auto fn = [](auto x, auto v) {
    const auto s = 1.0 - x[0] * x[0] - x[1] * x[1];
    return (v[0] * v[0] + v[1] * v[1]) / (16.0 * s * s) + (x[1] * v[0] - x[0] * v[1]) / (2.0 * s);
  };
  auto coeffs = std::make_shared<MagneticCoefficients>();
  coeffs->metric = CoordMap::make(2, 4, [](auto x, auto out) {
    const auto s = 1.0 - x[0] * x[0] - x[1] * x[1];
    const auto g = 1.0 / (8.0 * s * s);
    out[0] = g;
    out[1] = 0.0 * g;
    out[2] = 0.0 * g;
    out[3] = g;
  });
  coeffs->one_form = CoordMap::make(2, 2, [](auto x, auto out) {
    const auto s = 1.0 - x[0] * x[0] - x[1] * x[1];
    out[0] = x[1] / (2.0 * s);
    out[1] = -x[0] / (2.0 * s);
  });
  coeffs->potential = CoordMap::constant(2, {0.0});
  LagrangianModel m(Family::PoincareMagnetic, make_ad_field(2, fn, "poincare_magnetic"),
                    "(v1^2+v2^2)/(16 s^2) + (x2 v1 - x1 v2)/(2 s), s = 1-|x|^2", disk);
  m.with_coefficients(std::move(coeffs)).with_domain_text("|x| < 1");
  return m;
}

/// CustomExpression model: L given as DSL text in x1..xn, v1..vn. An optional `domain_text`
/// expression in x restricts positions to where it is positive.
inline LagrangianModel parse_lagrangian(std::string_view text, int dim,
                                        std::string_view domain_text = {}) {
  detail::check_dim(dim);
  auto expr = std::make_shared<const Expression>(Expression::parse(text, dim));
  PositionDomain domain;
  if (!domain_text.empty()) {
    auto dom = std::make_shared<const Expression>(Expression::parse(domain_text, dim));
    if (dom->uses_velocity()) throw ConfigError("domain expression may only use x1..xn");
    domain = [dom, dim](const Vec& x) {
      try {
        return dom->eval(std::span<const double>(x.data(), dim)) > 0.0;
      } catch (const DomainError&) {
        return false;
      }
    };
  }
  auto fn = [expr](auto x, auto v) { return expr->eval(x, v); };
  LagrangianModel m(Family::CustomExpression, make_ad_field(dim, fn, "expression"),
                    std::string(text), std::move(domain));
  m.with_domain_text(std::string(domain_text));
  return m;
}

/// Power of a Riemannian quadratic form, L = (g_ij v^i v^j)^(k/2) / k, which is k-homogeneous and
/// strongly convex on the slit bundle for k >= 2.
inline LagrangianModel metric_power(CoordMap metric, double k, PositionDomain domain = {}) {
  const int n = metric.dim();
  auto g = std::make_shared<const CoordMap>(std::move(metric));
  auto fn = [g, n, k](auto x, auto v) {
    using T = typename decltype(x)::value_type;
    using std::pow;
    const auto gm = (*g)(x);
    T q(0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) q += gm[i * n + j] * v[i] * v[j];
    return pow(q, 0.5 * k) / k;
  };
  return LagrangianModel(Family::CustomExpression, make_ad_field(n, fn, "metric_power"),
                         "(g(v,v))^(k/2)/k", std::move(domain));
}

/// Tags `base` as k-homogeneous in the velocities after checking Euler's identity
/// sum v^i dL/dv^i = k L at sampled points (relative 1e-10); InvarianceError otherwise.
inline LagrangianModel k_homogeneous(LagrangianModel base, double k, std::uint64_t seed = 7,
                                     int samples = 32) {
  if (!(k >= 2.0)) throw ConfigError("k-homogeneous Lagrangians need k >= 2");
  const int n = base.dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(-0.5, 0.5);
  std::normal_distribution<double> nv(0.0, 1.0);
  int checked = 0;
  for (int s = 0; s < 4 * samples && checked < samples; ++s) {
    Vec x(n), v(n);
    for (int i = 0; i < n; ++i) x[i] = ux(rng), v[i] = nv(rng);
    if (!base.in_domain(x)) continue;
    SecondJet j;
    try {
      j = base.jet(x, v);
    } catch (const DomainError&) {
      continue;
    }
    if (rel_diff(v.dot(j.d_y), k * j.value) > 1e-10)
      throw InvarianceError("Lagrangian is not " + std::to_string(k) + "-homogeneous");
    ++checked;
  }
  if (checked == 0) throw ConfigError("no valid sample points for the homogeneity check");
  LagrangianModel m(Family::KHomogeneous, base.field(), base.description(), base.domain());
  m.with_degree(k).with_domain_text(base.domain_text());
  return m;
}

// ---------------------------------------------------------------------------------------------

/// E_L = sum v^i dL/dv^i - L.
inline double energy(const LagrangianModel& L, const Vec& x, const Vec& v) {
  const SecondJet j = L.jet(x, v);
  return v.dot(j.d_y) - j.value;
}

inline double energy(const SecondJet& j, const Vec& v) { return v.dot(j.d_y) - j.value; }

struct ConvexityResult {
  bool is_convex = false;
  double min_eigenvalue = 0.0;
};

/// Positive-definiteness of the fibre Hessian d^2L/dv dv. Domain errors propagate.
inline ConvexityResult strong_convexity_check(const LagrangianModel& L, const Vec& x,
                                              const Vec& v) {
  const SecondJet j = L.jet(x, v);
  if (!j.d_yy.allFinite()) return {false, std::numeric_limits<double>::quiet_NaN()};
  return {is_positive_definite(j.d_yy), min_eigenvalue(j.d_yy)};
}

/// Acceleration of the Lagrangian vector field from its jet: g a = dL/dx - (d^2L/dx dv)^T v.
inline Vec el_acceleration(const SecondJet& j, const Vec& v) {
  const Vec rhs = j.d_x - j.d_xy.transpose() * v;
  return solve_symmetric(j.d_yy, rhs, "Lagrangian Hessian");
}

inline Vec el_acceleration(const LagrangianModel& L, const Vec& x, const Vec& v) {
  return el_acceleration(L.jet(x, v), v);
}

/// Integration settings shared by the trajectory-producing operations.
struct IntegrateOptions {
  double tol = 1e-11;
  int samples = 1001;
  std::vector<double> sample_times;
  std::function<bool(double t, const Vec& x, const Vec& v)> stop;
};

inline OdeOptions to_ode_options(const IntegrateOptions& o) {
  OdeOptions ode;
  ode.rtol = o.tol;
  ode.atol = o.tol;
  ode.samples = o.samples;
  ode.sample_times = o.sample_times;
  ode.stop = o.stop;
  return ode;
}

/// Euler-Lagrange trajectory from (x0, v0) over [0, t_end], energy logged at every sample.
inline Trajectory integrate_el(const LagrangianModel& L, const Vec& x0, const Vec& v0,
                               double t_end, const IntegrateOptions& opt = {}) {
  const ConvexityResult c = strong_convexity_check(L, x0, v0);
  if (!c.is_convex)
    throw PreconditionError("Lagrangian is not strongly convex at the initial state");
  OdeOptions ode = to_ode_options(opt);
  if (L.domain()) {
    ode.guard = [&L](const Vec& x, const Vec&) {
      return L.in_domain(x) ? std::string() : std::string("left the model domain");
    };
  }
  auto accel = [&L](const Vec& x, const Vec& v) { return el_acceleration(L, x, v); };
  auto log = [&L](const Vec& x, const Vec& v) { return energy(L, x, v); };
  Trajectory t = integrate_second_order(accel, x0, v0, t_end, ode, log);
  t.log_label = "E_L";
  return t;
}

}  // namespace routhlab
