#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "routhlab/calculus.hpp"
#include "routhlab/errors.hpp"
#include "routhlab/lagrangian.hpp"
#include "routhlab/report.hpp"

namespace routhlab {

// ---------------------------------------------------------------------------------------------
// Homogenized field F(x0, x, y0, y) = y0 L(x, y / y0) on the slit bundle y0 > 0.

/// F on T(R x Q) with chart ordering (x0, x1..xn), (y0, y1..yn). x0 is cyclic.
class HomogenizedField {
 public:
  explicit HomogenizedField(LagrangianModel base) : base_(std::move(base)) {}

  const LagrangianModel& base() const { return base_; }
  int dim() const { return base_.dim() + 1; }

  double value(const Vec& x, const Vec& y) const {
    const int n = base_.dim();
    const double y0 = y[0];
    if (!(y0 > 0.0)) throw DomainError("homogenized field needs y0 > 0");
    const Vec u = y.tail(n) / y0;
    return y0 * base_.value(x.tail(n), u);
  }

  /// Jet by the chain rule through pi: (x0, x, y0, y) -> (x, y / y0).
  SecondJet jet(const Vec& x, const Vec& y) const {
    const int n = base_.dim();
    const double y0 = y[0];
    if (!(y0 > 0.0)) throw DomainError("homogenized field needs y0 > 0");
    const Vec u = y.tail(n) / y0;
    const SecondJet j = base_.jet(x.tail(n), u);
    const Vec w = j.d_yy * u;

    SecondJet r = SecondJet::zeros(n + 1);
    r.value = y0 * j.value;
    r.d_x.tail(n) = y0 * j.d_x;
    r.d_y[0] = j.value - u.dot(j.d_y);
    r.d_y.tail(n) = j.d_y;
    r.d_yy(0, 0) = u.dot(w) / y0;
    r.d_yy.block(1, 1, n, n) = j.d_yy / y0;
    r.d_yy.block(1, 0, n, 1) = -w / y0;
    r.d_yy.block(0, 1, 1, n) = -w.transpose() / y0;
    r.d_xy.block(1, 0, n, 1) = j.d_x - j.d_xy * u;
    r.d_xy.block(1, 1, n, n) = j.d_xy;
    return r;
  }

  ScalarField as_field() const {
    auto self = std::make_shared<const HomogenizedField>(*this);
    return ScalarField(
        dim(), [self](const Vec& x, const Vec& y) { return self->value(x, y); },
        [self](const Vec& x, const Vec& y) { return self->jet(x, y); }, "homogenized");
  }

 private:
  LagrangianModel base_;
};

inline HomogenizedField homogenize(const LagrangianModel& L) { return HomogenizedField(L); }

// ---------------------------------------------------------------------------------------------
// Finsler models.

enum class Provenance { NumericFe, RandersClosedForm, KHomogeneousClosedForm, Ftau, GaugeShifted };

inline const char* provenance_name(Provenance p) {
  switch (p) {
    case Provenance::NumericFe: return "numeric_Fe";
    case Provenance::RandersClosedForm: return "randers";
    case Provenance::KHomogeneousClosedForm: return "k_homogeneous_closed_form";
    case Provenance::Ftau: return "F_tau";
    case Provenance::GaugeShifted: return "gauge_shifted";
  }
  return "unknown";
}

/// A 1-homogeneous function on the slit tangent bundle. Evaluation at y = 0 or outside the
/// position domain raises DomainError.
class FinslerModel {
 public:
  FinslerModel() = default;
  FinslerModel(Provenance provenance, ScalarField field, std::string description,
               PositionDomain domain = {})
      : provenance_(provenance),
        field_(std::move(field)),
        description_(std::move(description)),
        domain_(std::move(domain)) {}

  Provenance provenance() const { return provenance_; }
  int dim() const { return field_.dim(); }
  const ScalarField& field() const { return field_; }
  const std::string& description() const { return description_; }
  const PositionDomain& domain() const { return domain_; }
  bool in_domain(const Vec& x) const { return !domain_ || domain_(x); }

  double value(const Vec& x, const Vec& y) const {
    require(x, y);
    return field_.value(x, y);
  }

  SecondJet jet(const Vec& x, const Vec& y) const {
    require(x, y);
    return routhlab::jet(field_, x, y);
  }

  /// Scalar field view with the domain checks applied (for fd_jet and generic tools).
  ScalarField checked_field() const {
    auto self = std::make_shared<const FinslerModel>(*this);
    return ScalarField(
        dim(), [self](const Vec& x, const Vec& y) { return self->value(x, y); },
        [self](const Vec& x, const Vec& y) { return self->jet(x, y); }, field_.name());
  }

 private:
  void require(const Vec& x, const Vec& y) const {
    if (domain_ && !domain_(x)) throw DomainError("position outside the Finsler model domain");
    if (y.squaredNorm() == 0.0) throw DomainError("zero vector is not in the slit bundle");
  }

  Provenance provenance_ = Provenance::NumericFe;
  ScalarField field_;
  std::string description_;
  PositionDomain domain_;
};

// ---------------------------------------------------------------------------------------------
// The energy momentum relation e = E_L(x, y / iota0).

struct EnergySolveResult {
  double iota0 = 0.0;
  int newton_iters = 0;
  double residual = 0.0;
};

/// Positive root iota0 of E_L(x, y / iota0) = e.
///
/// Works in lambda = 1 / iota0, where phi(lambda) = E_L(x, lambda y) - e is strictly increasing
/// for strongly convex L (phi' = y^T (d^2L/dv dv) (lambda y) > 0). A geometric
/// bracket is grown from lambda = 1 / bracket_hint (default 1 / |y|), then refined by Newton
/// with bisection fallback.
inline EnergySolveResult solve_iota0(const LagrangianModel& L, double e, const Vec& x,
                                     const Vec& y, double bracket_hint = 0.0) {
  const double ny = y.norm();
  if (!(ny > 0.0)) throw DomainError("iota0 is undefined at y = 0");
  if (!std::isfinite(e)) throw PreconditionError("energy level must be finite");

  struct Eval {
    double phi;
    double dphi;
  };
  auto eval = [&](double lambda) {
    const Vec u = lambda * y;
    const SecondJet j = L.jet(x, u);
    return Eval{energy(j, u) - e, y.dot(j.d_yy * u)};
  };

  const double tol_phi = 1e-13 * (1.0 + std::abs(e));
  double lam = bracket_hint > 0.0 ? 1.0 / bracket_hint : 1.0 / ny;
  Eval ev = eval(lam);
  double lo = 0.0, hi = std::numeric_limits<double>::infinity();
  Eval ev_lo{}, ev_hi{};
  if (ev.phi > 0.0) {
    hi = lam;
    ev_hi = ev;
    double prev = ev.phi;
    for (int k = 0;; ++k) {
      lam *= 0.5;
      ev = eval(lam);
      if (ev.phi <= 0.0) {
        lo = lam;
        ev_lo = ev;
        break;
      }
      hi = lam;
      ev_hi = ev;
      if (k > 8 && std::abs(prev - ev.phi) <= 1e-15 * (1.0 + std::abs(e)))
        throw EnergyUnreachable("energy level " + std::to_string(e) +
                                " is below the energy floor " + std::to_string(ev.phi + e) +
                                " at this point");
      if (k > 200)
        throw EnergyUnreachable("energy level " + std::to_string(e) + " is not attained");
      prev = ev.phi;
    }
  } else {
    lo = lam;
    ev_lo = ev;
    for (int k = 0;; ++k) {
      lam *= 2.0;
      ev = eval(lam);
      if (ev.phi >= 0.0) {
        hi = lam;
        ev_hi = ev;
        break;
      }
      lo = lam;
      ev_lo = ev;
      if (k > 200)
        throw EnergyUnreachable("energy level " + std::to_string(e) + " is above the range of E_L");
    }
  }

  // Safeguarded Newton inside [lo, hi].
  EnergySolveResult res;
  lam = std::abs(ev_lo.phi) < std::abs(ev_hi.phi) ? lo : hi;
  ev = lam == lo ? ev_lo : ev_hi;
  for (int it = 0; it < 200; ++it) {
    if (std::abs(ev.phi) <= tol_phi) break;
    double next = lam - ev.phi / ev.dphi;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - lam);
    lam = next;
    ev = eval(lam);
    ++res.newton_iters;
    if (ev.phi > 0.0) {
      hi = lam;
    } else {
      lo = lam;
    }
    if (step <= 1e-16 * lam) break;
  }
  res.iota0 = 1.0 / lam;
  res.residual = std::abs(energy(L, x, y / res.iota0) - e);
  if (!(res.residual <= 1e-12 * (1.0 + std::abs(e))))
    throw NoConvergence("iota0 root solve stalled with residual " + std::to_string(res.residual));
  return res;
}

/// First-order jet of a level function on TQ.
using LevelFunction = std::function<FirstJet(const Vec& x, const Vec& y)>;

inline LevelFunction level_from_field(ScalarField f) {
  return [f = std::move(f)](const Vec& x, const Vec& y) { return f.first_jet(x, y); };
}

namespace detail {

// Implicit derivatives of iota0 at a converged root. `j` is the jet of L at (x, u = y / iota).
struct Iota0Derivatives {
  Vec d_y;
  Vec d_x;
};

inline Iota0Derivatives iota0_derivatives(const SecondJet& j, const Vec& u, double iota) {
  const Vec w = j.d_yy * u;
  const double wu = w.dot(u);
  if (!(wu > 0.0)) throw SingularHessian("energy relation is not R-regular here");
  const Vec e_x = j.d_xy * u - j.d_x;
  return {w / wu, iota * e_x / wu};
}

}  // namespace detail

/// iota0_e(x, y) with first derivatives from the implicit function theorem.
inline LevelFunction iota0_level(const LagrangianModel& L, double e) {
  auto base = std::make_shared<const LagrangianModel>(L);
  return [base, e](const Vec& x, const Vec& y) {
    const double iota = solve_iota0(*base, e, x, y).iota0;
    const Vec u = y / iota;
    const auto d = detail::iota0_derivatives(base->jet(x, u), u, iota);
    return FirstJet{iota, d.d_x, d.d_y};
  };
}

/// Numeric Jacobi-Finsler function F_e(x, y) = iota0 (L(x, y / iota0) + e).
///
/// First derivatives reduce to dF_e/dy = dL/dv o iota and dF_e/dx = iota dL/dx o iota; second
/// derivatives follow by differentiating those through u = y / iota0(x, y).
inline FinslerModel jacobi_finsler(const LagrangianModel& L, double e) {
  const int n = L.dim();
  auto base = std::make_shared<const LagrangianModel>(L);
  auto value = [base, e](const Vec& x, const Vec& y) {
    const double iota = solve_iota0(*base, e, x, y).iota0;
    return iota * (base->value(x, y / iota) + e);
  };
  auto jet = [base, e, n](const Vec& x, const Vec& y) {
    const double iota = solve_iota0(*base, e, x, y).iota0;
    const Vec u = y / iota;
    const SecondJet j = base->jet(x, u);
    const auto d = detail::iota0_derivatives(j, u, iota);
    const Mat Dy = (Mat::Identity(n, n) - u * d.d_y.transpose()) / iota;  // du/dy
    const Mat Dx = -u * d.d_x.transpose() / iota;                           // du/dx

    SecondJet r;
    r.value = iota * (j.value + e);
    r.d_x = iota * j.d_x;
    r.d_y = j.d_y;
    r.d_yy = j.d_yy * Dy;
    r.d_yy = 0.5 * (r.d_yy + r.d_yy.transpose()).eval();
    r.d_xy = j.d_xy + (j.d_yy * Dx).transpose();
    return r;
  };
  return FinslerModel(Provenance::NumericFe, ScalarField(n, value, jet, "numeric_Fe"),
                      "F_e of " + L.description() + " at e=" + std::to_string(e), L.domain());
}

// ---------------------------------------------------------------------------------------------
// Closed forms.

/// F_e = sqrt(2 (e - V) g(y, y)) + beta(y) for L = 1/2 g(v, v) + beta(v) - V.
inline FinslerModel randers_closed_form(const MagneticCoefficients& c, double e,
                                        PositionDomain domain = {}) {
  const int n = c.dim();
  auto cc = std::make_shared<const MagneticCoefficients>(c);
  auto fn = [cc, n, e](auto x, auto y) {
    using T = typename decltype(x)::value_type;
    using std::sqrt;
    const auto g = cc->metric(x);
    T q(0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) q += g[i * n + j] * y[i] * y[j];
    const T V = cc->potential.valid() ? cc->potential(x)[0] : T(0.0);
    if (!(value_of(V) < e)) throw DomainError("energy level not above the potential");
    T F = sqrt(2.0 * (e - V) * q);
    if (cc->one_form.valid()) {
      const auto b = cc->one_form(x);
      for (int i = 0; i < n; ++i) F += b[i] * y[i];
    }
    return F;
  };
  return FinslerModel(Provenance::RandersClosedForm, make_ad_field(n, fn, "randers"),
                      "sqrt(2(e-V) g(y,y)) + beta(y), e=" + std::to_string(e), std::move(domain));
}

inline FinslerModel randers_closed_form(const LagrangianModel& L, double e) {
  if (!L.coefficients()) throw ConfigError("model has no metric/one-form/potential data");
  return randers_closed_form(*L.coefficients(), e, L.domain());
}

struct GlobalCriterion {
  bool is_global = false;
  /// e - max over samples of (1/2 g^ij beta_i beta_j + V).
  double margin = 0.0;
  /// max over samples of g~(beta#, beta#) with g~ = 2 (e - V) g; < 1 iff global.
  double max_beta_norm = 0.0;
};

/// Global Finsler test for the Randers form over the sampled positions.
inline GlobalCriterion randers_global_criterion(const MagneticCoefficients& c, double e,
                                                const std::vector<Vec>& samples) {
  if (samples.empty()) throw PreconditionError("criterion needs at least one sample position");
  double worst = -std::numeric_limits<double>::infinity();
  double worst_norm = 0.0;
  for (const Vec& x : samples) {
    const Mat g = c.metric_at(x);
    const Vec b = c.one_form_at(x);
    const double V = c.potential_at(x);
    const double bb = b.dot(g.llt().solve(b));
    worst = std::max(worst, 0.5 * bb + V);
    const double denom = 2.0 * (e - V);
    worst_norm = std::max(worst_norm, denom > 0.0 ? bb / denom
                                                  : std::numeric_limits<double>::infinity());
  }
  GlobalCriterion r;
  r.margin = e - worst;
  r.is_global = r.margin > 0.0;
  r.max_beta_norm = worst_norm;
  return r;
}

/// F_e = k ((k-1)/e)^((1-k)/k) L^(1/k) for a k-homogeneous L.
inline FinslerModel k_homogeneous_closed_form(const LagrangianModel& L, double e) {
  const double k = L.degree();
  if (!(k >= 2.0)) throw ConfigError("model is not tagged as k-homogeneous");
  if (!(e > 0.0)) throw EnergyUnreachable("k-homogeneous closed form needs e > 0");
  const int n = L.dim();
  const double c = k * std::pow((k - 1.0) / e, (1.0 - k) / k);
  auto base = std::make_shared<const LagrangianModel>(L);
  auto value = [base, c, k](const Vec& x, const Vec& y) {
    const double l = base->value(x, y);
    if (!(l > 0.0)) throw DomainError("k-homogeneous Lagrangian must be positive");
    return c * std::pow(l, 1.0 / k);
  };
  auto jet = [base, c, k](const Vec& x, const Vec& y) {
    const SecondJet j = base->jet(x, y);
    const double l = j.value;
    if (!(l > 0.0)) throw DomainError("k-homogeneous Lagrangian must be positive");
    const double p = 1.0 / k;
    return compose(j, c * std::pow(l, p), c * p * std::pow(l, p - 1.0),
                   c * p * (p - 1.0) * std::pow(l, p - 2.0));
  };
  return FinslerModel(Provenance::KHomogeneousClosedForm,
                      ScalarField(n, value, jet, "k_homogeneous_closed_form"),
                      "k((k-1)/e)^((1-k)/k) L^(1/k), e=" + std::to_string(e), L.domain());
}

/// F_tau(x, y) = (|y| + tau (x2 y1 - x1 y2)) / (2 (1 - |x|^2)) on the open unit disk.
inline FinslerModel ftau(double tau) {
  auto fn = [tau](auto x, auto y) {
    using std::sqrt;
    const auto s = 1.0 - x[0] * x[0] - x[1] * x[1];
    return (sqrt(y[0] * y[0] + y[1] * y[1]) + tau * (x[1] * y[0] - x[0] * y[1])) / (2.0 * s);
  };
  auto disk = [](const Vec& x) { return x.squaredNorm() < 1.0; };
  return FinslerModel(Provenance::Ftau, make_ad_field(2, fn, "F_tau"),
                      "F_tau, tau=" + std::to_string(tau), disk);
}

/// F + df(y) for a scalar function f on Q (a total-derivative gauge).
inline FinslerModel gauge_shift(const FinslerModel& F, const CoordMap& f) {
  if (f.outputs() != 1 || f.dim() != F.dim()) throw ConfigError("gauge must be a scalar on Q");
  auto base = std::make_shared<const FinslerModel>(F);
  auto value = [base, f](const Vec& x, const Vec& y) {
    const auto [g, h] = coord_gradient_hessian(f, x);
    return base->value(x, y) + g.dot(y);
  };
  auto jet = [base, f](const Vec& x, const Vec& y) {
    const auto [g, h] = coord_gradient_hessian(f, x);
    SecondJet r = base->jet(x, y);
    r.value += g.dot(y);
    r.d_x += h * y;
    r.d_y += g;
    r.d_xy += h;
    return r;
  };
  return FinslerModel(Provenance::GaugeShifted, ScalarField(F.dim(), value, jet, "gauge_shifted"),
                      F.description() + " + df", F.domain());
}

// ---------------------------------------------------------------------------------------------

/// Positive quasi-definiteness of the fibre Hessian h of F at (x, y): w^T h w >= 0 for random w,
/// zero only along y, and h y = 0.
inline VerificationReport quasi_definite_check(const FinslerModel& F, const Vec& x, const Vec& y,
                                               int samples = 64, std::uint64_t seed = 1) {
  VerificationReport rep;
  rep.name = "quasi_definite";
  const SecondJet j = F.jet(x, y);
  const Mat& h = j.d_yy;
  const int n = F.dim();
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  const Vec yhat = y.normalized();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  double min_q = std::numeric_limits<double>::infinity();
  double min_q_transverse = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    Vec w(n);
    for (int i = 0; i < n; ++i) w[i] = nd(rng);
    w.normalize();
    const double q = w.dot(h * w);
    min_q = std::min(min_q, q / scale);
    const double sin_angle = (w - w.dot(yhat) * yhat).norm();
    if (sin_angle > 1e-6) min_q_transverse = std::min(min_q_transverse, q / (sin_angle * sin_angle));
  }
  rep.add_ge("min_quadratic_form", min_q, -1e-12);
  rep.add_le("kernel_residual", (h * yhat).norm() / scale, 1e-10);
  rep.add_le("quadratic_form_along_y", std::abs(yhat.dot(h * yhat)) / scale, 1e-12);

  // Strict positivity on the complement of y.
  if (n > 1) {
    Mat basis = Mat::Identity(n, n) - yhat * yhat.transpose();
    Eigen::JacobiSVD<Mat> svd(basis, Eigen::ComputeFullU);
    const Mat Q = svd.matrixU().leftCols(n - 1);
    const double lam = min_eigenvalue(Q.transpose() * h * Q);
    rep.add_ge("min_transverse_eigenvalue", lam, 1e-12 * scale);
    rep.add_ge("min_transverse_quadratic_form", min_q_transverse, 0.0);
  }
  return rep;
}

}  // namespace routhlab
