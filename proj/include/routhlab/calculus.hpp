#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "routhlab/errors.hpp"
#include "routhlab/jet.hpp"
#include "routhlab/linalg.hpp"

namespace routhlab {

/// Value and first/second partials of a scalar field on a tangent-bundle chart at one point.
/// d_xy(a, b) is the mixed partial with respect to x^a and y^b.
struct SecondJet {
  double value = 0.0;
  Vec d_x;
  Vec d_y;
  Mat d_yy;
  Mat d_xy;

  static SecondJet zeros(int n) {
    return {0.0, Vec::Zero(n), Vec::Zero(n), Mat::Zero(n, n), Mat::Zero(n, n)};
  }

  int dim() const { return static_cast<int>(d_y.size()); }

  bool all_finite() const {
    return std::isfinite(value) && d_x.allFinite() && d_y.allFinite() && d_yy.allFinite() &&
           d_xy.allFinite();
  }
};

struct FirstJet {
  double value = 0.0;
  Vec d_x;
  Vec d_y;
};

/// Type-erased scalar field (x, y) -> R on an n-dimensional chart.
///
/// The value path exists so that root solves and finite differences do not pay for jets.
class ScalarField {
 public:
  using ValueFn = std::function<double(const Vec&, const Vec&)>;
  using JetFn = std::function<SecondJet(const Vec&, const Vec&)>;

  ScalarField() = default;
  ScalarField(int dim, ValueFn value, JetFn jet, std::string name = {})
      : dim_(dim), value_(std::move(value)), jet_(std::move(jet)), name_(std::move(name)) {}

  int dim() const { return dim_; }
  const std::string& name() const { return name_; }
  bool valid() const { return static_cast<bool>(jet_); }

  double value(const Vec& x, const Vec& y) const { return value_(x, y); }
  SecondJet jet(const Vec& x, const Vec& y) const { return jet_(x, y); }

  FirstJet first_jet(const Vec& x, const Vec& y) const {
    SecondJet j = jet_(x, y);
    return {j.value, std::move(j.d_x), std::move(j.d_y)};
  }

 private:
  int dim_ = 0;
  ValueFn value_;
  JetFn jet_;
  std::string name_;
};

namespace detail {

inline void check_dim(int dim) {
  if (dim < 1 || dim > kMaxDim)
    throw ConfigError("dimension " + std::to_string(dim) + " outside supported range 1.." +
                      std::to_string(kMaxDim));
}

}  // namespace detail

/// Builds a ScalarField from a generic callable `fn(std::span<const T> x, std::span<const T> y)`
/// that is valid for T = double and T = Jet. Jets come from one second-order forward pass.
template <class Fn>
ScalarField make_ad_field(int dim, Fn fn, std::string name = {}) {
  detail::check_dim(dim);
  auto value = [dim, fn](const Vec& x, const Vec& y) -> double {
    return fn(std::span<const double>(x.data(), dim), std::span<const double>(y.data(), dim));
  };
  auto jet = [dim, fn](const Vec& x, const Vec& y) -> SecondJet {
    std::array<Jet, kMaxDim> xs;
    std::array<Jet, kMaxDim> ys;
    for (int i = 0; i < dim; ++i) {
      xs[i] = Jet::variable(x[i], i, 2 * dim);
      ys[i] = Jet::variable(y[i], dim + i, 2 * dim);
    }
    const Jet r = fn(std::span<const Jet>(xs.data(), dim), std::span<const Jet>(ys.data(), dim));
    SecondJet out = SecondJet::zeros(dim);
    out.value = r.value();
    for (int i = 0; i < dim; ++i) {
      out.d_x[i] = r.d(i);
      out.d_y[i] = r.d(dim + i);
      for (int j = 0; j < dim; ++j) {
        out.d_yy(i, j) = r.d2(dim + i, dim + j);
        out.d_xy(i, j) = r.d2(i, dim + j);
      }
    }
    return out;
  };
  return ScalarField(dim, std::move(value), std::move(jet), std::move(name));
}

/// Vector-valued function of position only (metric entries, one-forms, potentials, gauges),
/// evaluable on doubles and on jets.
class CoordMap {
 public:
  using DoubleFn = std::function<void(std::span<const double>, std::span<double>)>;
  using JetFn = std::function<void(std::span<const Jet>, std::span<Jet>)>;

  CoordMap() = default;

  /// `fn(std::span<const T> x, std::span<T> out)` for T = double and T = Jet.
  template <class Fn>
  static CoordMap make(int dim, int outputs, Fn fn) {
    CoordMap m;
    m.dim_ = dim;
    m.outputs_ = outputs;
    m.d_ = [fn](std::span<const double> x, std::span<double> out) { fn(x, out); };
    m.j_ = [fn](std::span<const Jet> x, std::span<Jet> out) { fn(x, out); };
    return m;
  }

  static CoordMap constant(int dim, std::vector<double> values) {
    const int m = static_cast<int>(values.size());
    return make(dim, m, [values](auto, auto out) {
      for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i];
    });
  }

  int dim() const { return dim_; }
  int outputs() const { return outputs_; }
  bool valid() const { return static_cast<bool>(d_); }

  void eval(std::span<const double> x, std::span<double> out) const { d_(x, out); }
  void eval(std::span<const Jet> x, std::span<Jet> out) const { j_(x, out); }

  template <class T>
  std::vector<T> operator()(std::span<const T> x) const {
    std::vector<T> out(outputs_);
    eval(x, std::span<T>(out));
    return out;
  }

  std::vector<double> at(const Vec& x) const {
    return (*this)(std::span<const double>(x.data(), x.size()));
  }

 private:
  int dim_ = 0;
  int outputs_ = 0;
  DoubleFn d_;
  JetFn j_;
};

/// Gradient and Hessian of a scalar CoordMap (output 0) at x.
inline std::pair<Vec, Mat> coord_gradient_hessian(const CoordMap& f, const Vec& x) {
  const int n = static_cast<int>(x.size());
  std::array<Jet, kMaxDim> xs;
  for (int i = 0; i < n; ++i) xs[i] = Jet::variable(x[i], i, n);
  const auto out = f(std::span<const Jet>(xs.data(), n));
  Vec g(n);
  Mat h(n, n);
  for (int i = 0; i < n; ++i) {
    g[i] = out[0].d(i);
    for (int j = 0; j < n; ++j) h(i, j) = out[0].d2(i, j);
  }
  return {g, h};
}

/// Evaluates all partials of `field` at (x, y) by forward-mode differentiation.
inline SecondJet jet(const ScalarField& field, const Vec& x, const Vec& y) {
  if (x.size() != field.dim() || y.size() != field.dim())
    throw ArityError("point dimension does not match field dimension");
  if (!x.allFinite() || !y.allFinite()) throw DomainError("non-finite evaluation point");
  SecondJet r = field.jet(x, y);
  if (!r.all_finite()) throw DomainError("derivatives are not finite at this point");
  return r;
}

/// Central-difference oracle for jet().
///
/// Without an explicit step, first differences use eps^(1/3) and second differences eps^(1/4),
/// each scaled by max(1, |coordinate|). An explicit h is used for both orders.
inline SecondJet fd_jet(const ScalarField& field, const Vec& x, const Vec& y,
                        std::optional<double> h = std::nullopt) {
  const int n = field.dim();
  if (h && !(*h > 0.0)) throw PreconditionError("finite-difference step must be positive");
  constexpr double eps = std::numeric_limits<double>::epsilon();
  const double base1 = h ? *h : std::cbrt(eps);
  const double base2 = h ? *h : std::sqrt(std::sqrt(eps));

  SecondJet out = SecondJet::zeros(n);
  out.value = field.value(x, y);  // center: plain DomainError propagates

  // Stencil evaluation; (xs, ys) offsets are applied by the caller.
  auto at = [&](const Vec& xs, const Vec& ys) {
    try {
      return field.value(xs, ys);
    } catch (const StencilDomainError&) {
      throw;
    } catch (const DomainError& e) {
      throw StencilDomainError(std::string("finite-difference stencil left the domain: ") +
                               e.what());
    }
  };
  auto step = [](double base, double c) { return base * std::max(1.0, std::abs(c)); };

  for (int i = 0; i < n; ++i) {
    const double hx = step(base1, x[i]);
    Vec xp = x, xm = x;
    xp[i] += hx;
    xm[i] -= hx;
    out.d_x[i] = (at(xp, y) - at(xm, y)) / (2.0 * hx);

    const double hy = step(base1, y[i]);
    Vec yp = y, ym = y;
    yp[i] += hy;
    ym[i] -= hy;
    out.d_y[i] = (at(x, yp) - at(x, ym)) / (2.0 * hy);
  }

  for (int i = 0; i < n; ++i) {
    const double hi = step(base2, y[i]);
    {
      Vec yp = y, ym = y;
      yp[i] += hi;
      ym[i] -= hi;
      out.d_yy(i, i) = (at(x, yp) - 2.0 * out.value + at(x, ym)) / (hi * hi);
    }
    for (int j = 0; j < i; ++j) {
      const double hj = step(base2, y[j]);
      Vec ypp = y, ypm = y, ymp = y, ymm = y;
      ypp[i] += hi, ypp[j] += hj;
      ypm[i] += hi, ypm[j] -= hj;
      ymp[i] -= hi, ymp[j] += hj;
      ymm[i] -= hi, ymm[j] -= hj;
      const double v = (at(x, ypp) - at(x, ypm) - at(x, ymp) + at(x, ymm)) / (4.0 * hi * hj);
      out.d_yy(i, j) = v;
      out.d_yy(j, i) = v;
    }
  }

  for (int a = 0; a < n; ++a) {
    const double ha = step(base2, x[a]);
    Vec xp = x, xm = x;
    xp[a] += ha;
    xm[a] -= ha;
    for (int b = 0; b < n; ++b) {
      const double hb = step(base2, y[b]);
      Vec yp = y, ym = y;
      yp[b] += hb;
      ym[b] -= hb;
      out.d_xy(a, b) = (at(xp, yp) - at(xp, ym) - at(xm, yp) + at(xm, ym)) / (4.0 * ha * hb);
    }
  }
  return out;
}

/// Largest componentwise discrepancy |a - b| / max(1, |a|, |b|) over every jet entry.
inline double jet_discrepancy(const SecondJet& a, const SecondJet& b) {
  double worst = rel_diff(a.value, b.value);
  auto scan = [&worst](const auto& u, const auto& v) {
    for (Eigen::Index k = 0; k < u.size(); ++k)
      worst = std::max(worst, rel_diff(u.data()[k], v.data()[k]));
  };
  scan(a.d_x, b.d_x);
  scan(a.d_y, b.d_y);
  scan(a.d_yy, b.d_yy);
  scan(a.d_xy, b.d_xy);
  return worst;
}

/// Jet of phi(f) for a scalar function phi given phi(f), phi'(f), phi''(f).
inline SecondJet compose(const SecondJet& f, double p0, double p1, double p2) {
  SecondJet r;
  r.value = p0;
  r.d_x = p1 * f.d_x;
  r.d_y = p1 * f.d_y;
  r.d_yy = p1 * f.d_yy + p2 * f.d_y * f.d_y.transpose();
  r.d_xy = p1 * f.d_xy + p2 * f.d_x * f.d_y.transpose();
  return r;
}

}  // namespace routhlab
