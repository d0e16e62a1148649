#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "routhlab/routhlab.hpp"

namespace rt {

using routhlab::Vec;
using routhlab::Mat;

inline Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out[i++] = d;
  return out;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(g_); }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(g_); }
  Vec uniform_vec(int n, double lo, double hi) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }
  Vec normal_vec(int n) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = normal();
    return v;
  }
  /// Uniform point in the disk of radius r.
  Vec in_disk(double r) {
    for (;;) {
      Vec v = uniform_vec(2, -r, r);
      if (v.norm() < r) return v;
    }
  }
  std::mt19937_64& engine() { return g_; }

 private:
  std::mt19937_64 g_;
};

/// V(x) = |x|^2 / 2 in n dimensions.
inline routhlab::CoordMap half_square(int n) {
  return routhlab::CoordMap::make(n, 1, [n](auto x, auto out) {
    using T = typename decltype(out)::value_type;
    T s(0.0);
    for (int i = 0; i < n; ++i) s += x[i] * x[i];
    out[0] = 0.5 * s;
  });
}

/// Conformally flat magnetic model: g = exp(x1) I, beta = (sin x2, x1^2) / 2, V = x1 x2 / 4.
inline routhlab::MagneticCoefficients conformal_magnetic_coefficients() {
  using namespace routhlab;
  MagneticCoefficients c;
  c.metric = conformal_metric(CoordMap::make(2, 1, [](auto x, auto out) {
    using std::exp;
    out[0] = exp(x[0]);
  }));
  c.one_form = CoordMap::make(2, 2, [](auto x, auto out) {
    using std::sin;
    out[0] = 0.5 * sin(x[1]);
    out[1] = 0.5 * x[0] * x[0];
  });
  c.potential = CoordMap::make(2, 1, [](auto x, auto out) { out[0] = 0.25 * x[0] * x[1]; });
  return c;
}

/// Planar central force in polar coordinates (r, theta): L = (r'^2 + r^2 theta'^2) / 2 + 1 / r.
inline routhlab::LagrangianModel polar_kepler() {
  return routhlab::parse_lagrangian("0.5*(v1^2 + x1^2*v2^2) + 1/x1", 2, "x1");
}

}  // namespace rt
