#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace routhlab {

// Largest configuration dimension supported by the AD path. Every model in the toolkit is
// evaluated on (x, y) pairs, so a jet tracks at most 2 * kMaxDim independent variables.
inline constexpr int kMaxDim = 6;
inline constexpr int kMaxJetVars = 2 * kMaxDim;

/// Second-order forward-mode number.
///
/// Carries a value together with its gradient and Hessian with respect to up to kMaxJetVars
/// independent variables. The Hessian is stored packed (lower triangle, row major), so one
/// evaluation pass yields every second partial. Constants have nvars() == 0 and mix freely with
/// variables; all variables of one computation must be created with the same nvars.
class Jet {
 public:
  static constexpr int kCap = kMaxJetVars;
  static constexpr int kHessSize = kCap * (kCap + 1) / 2;

  Jet() = default;
  Jet(double value) : value_(value) {}  // NOLINT: constants convert implicitly

  static Jet variable(double value, int index, int nvars) {
    Jet j(value);
    j.n_ = nvars;
    j.g_[index] = 1.0;
    return j;
  }

  double value() const { return value_; }
  int nvars() const { return n_; }
  double d(int i) const { return g_[i]; }
  double d2(int i, int j) const { return h_[packed(i, j)]; }

  static constexpr int packed(int i, int j) {
    return i >= j ? i * (i + 1) / 2 + j : j * (j + 1) / 2 + i;
  }

  // f(u) given f(u0), f'(u0), f''(u0).
  Jet chain(double f0, double f1, double f2) const {
    Jet r(f0);
    r.n_ = n_;
    for (int i = 0; i < n_; ++i) r.g_[i] = f1 * g_[i];
    int k = 0;
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j <= i; ++j, ++k) r.h_[k] = f1 * h_[k] + f2 * g_[i] * g_[j];
    return r;
  }

  Jet& operator+=(const Jet& o) {
    value_ += o.value_;
    n_ = std::max(n_, o.n_);
    for (int i = 0; i < o.n_; ++i) g_[i] += o.g_[i];
    const int hs = o.n_ * (o.n_ + 1) / 2;
    for (int k = 0; k < hs; ++k) h_[k] += o.h_[k];
    return *this;
  }

  Jet& operator-=(const Jet& o) {
    value_ -= o.value_;
    n_ = std::max(n_, o.n_);
    for (int i = 0; i < o.n_; ++i) g_[i] -= o.g_[i];
    const int hs = o.n_ * (o.n_ + 1) / 2;
    for (int k = 0; k < hs; ++k) h_[k] -= o.h_[k];
    return *this;
  }

  Jet& operator*=(double s) {
    value_ *= s;
    for (int i = 0; i < n_; ++i) g_[i] *= s;
    const int hs = n_ * (n_ + 1) / 2;
    for (int k = 0; k < hs; ++k) h_[k] *= s;
    return *this;
  }

  Jet& operator+=(double s) {
    value_ += s;
    return *this;
  }

  Jet& operator-=(double s) {
    value_ -= s;
    return *this;
  }

  Jet operator-() const {
    Jet r = *this;
    r *= -1.0;
    return r;
  }

  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r(a.value_ * b.value_);
    r.n_ = std::max(a.n_, b.n_);
    const int n = r.n_;
    for (int i = 0; i < n; ++i) r.g_[i] = a.value_ * b.g_[i] + b.value_ * a.g_[i];
    int k = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j, ++k)
        r.h_[k] = a.value_ * b.h_[k] + b.value_ * a.h_[k] + a.g_[i] * b.g_[j] +
                  b.g_[i] * a.g_[j];
    return r;
  }

  friend Jet operator/(const Jet& a, const Jet& b) {
    const double inv = 1.0 / b.value_;
    return a * b.chain(inv, -inv * inv, 2.0 * inv * inv * inv);
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator+(Jet a, double b) { return a += b; }
  friend Jet operator+(double a, Jet b) { return b += a; }
  friend Jet operator-(Jet a, double b) { return a -= b; }
  friend Jet operator-(double a, const Jet& b) { return -b + a; }
  friend Jet operator*(Jet a, double b) { return a *= b; }
  friend Jet operator*(double a, Jet b) { return b *= a; }
  friend Jet operator/(Jet a, double b) { return a *= 1.0 / b; }
  friend Jet operator/(double a, const Jet& b) {
    const double inv = 1.0 / b.value_;
    return b.chain(a * inv, -a * inv * inv, 2.0 * a * inv * inv * inv);
  }

 private:
  double value_ = 0.0;
  int n_ = 0;
  std::array<double, kCap> g_{};
  std::array<double, kHessSize> h_{};
};

inline Jet sqrt(const Jet& a) {
  const double s = std::sqrt(a.value());
  return a.chain(s, 0.5 / s, -0.25 / (s * a.value()));
}

inline Jet exp(const Jet& a) {
  const double e = std::exp(a.value());
  return a.chain(e, e, e);
}

inline Jet log(const Jet& a) {
  const double u = a.value();
  return a.chain(std::log(u), 1.0 / u, -1.0 / (u * u));
}

inline Jet sin(const Jet& a) {
  const double s = std::sin(a.value());
  const double c = std::cos(a.value());
  return a.chain(s, c, -s);
}

inline Jet cos(const Jet& a) {
  const double s = std::sin(a.value());
  const double c = std::cos(a.value());
  return a.chain(c, -s, -c);
}

inline Jet pow(const Jet& a, double p) {
  const double u = a.value();
  if (p == 0.0) return Jet(1.0);
  if (p == 1.0) return a;
  if (p == 2.0) return a.chain(u * u, 2.0 * u, 2.0);
  return a.chain(std::pow(u, p), p * std::pow(u, p - 1.0), p * (p - 1.0) * std::pow(u, p - 2.0));
}

inline Jet pow(const Jet& a, const Jet& b) {
  if (b.nvars() == 0) return pow(a, b.value());
  return exp(b * log(a));
}

inline double value_of(double x) { return x; }
inline double value_of(const Jet& x) { return x.value(); }

}  // namespace routhlab
