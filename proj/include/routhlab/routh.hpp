#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "routhlab/errors.hpp"
#include "routhlab/lagrangian.hpp"
#include "routhlab/report.hpp"

namespace routhlab {

/// Partition of chart indices into cyclic coordinates x^a and shape coordinates x^i.
struct CyclicSplit {
  std::vector<int> cyclic;
  std::vector<int> shape;

  static CyclicSplit make(int n, std::vector<int> cyclic) {
    std::sort(cyclic.begin(), cyclic.end());
    if (std::adjacent_find(cyclic.begin(), cyclic.end()) != cyclic.end())
      throw ConfigError("duplicate cyclic index");
    for (int a : cyclic)
      if (a < 0 || a >= n) throw ConfigError("cyclic index " + std::to_string(a) + " out of range");
    if (cyclic.empty()) throw ConfigError("at least one cyclic coordinate is required");
    if (static_cast<int>(cyclic.size()) == n)
      throw ConfigError("all coordinates are cyclic: the reduced configuration space would be "
                        "zero-dimensional");
    CyclicSplit s;
    s.cyclic = cyclic;
    for (int i = 0; i < n; ++i)
      if (!std::binary_search(cyclic.begin(), cyclic.end(), i)) s.shape.push_back(i);
    return s;
  }

  int n() const { return static_cast<int>(cyclic.size() + shape.size()); }
  int m() const { return static_cast<int>(cyclic.size()); }

  Vec assemble(const Vec& cyclic_part, const Vec& shape_part) const {
    Vec full(n());
    for (int a = 0; a < m(); ++a) full[cyclic[a]] = cyclic_part[a];
    for (std::size_t i = 0; i < shape.size(); ++i) full[shape[i]] = shape_part[i];
    return full;
  }

  Vec cyclic_of(const Vec& full) const { return full(cyclic); }
  Vec shape_of(const Vec& full) const { return full(shape); }
};

/// Verifies by sampling that dL/dx^a vanishes on the cyclic indices; InvarianceError otherwise.
inline void check_cyclic_invariance(const LagrangianModel& L, const CyclicSplit& split,
                                    const std::vector<std::pair<Vec, Vec>>& samples) {
  int checked = 0;
  for (const auto& [x, y] : samples) {
    SecondJet j;
    try {
      j = L.jet(x, y);
    } catch (const DomainError&) {
      continue;
    }
    ++checked;
    for (int a : split.cyclic) {
      const double scale = std::max(1.0, j.d_x.cwiseAbs().maxCoeff());
      if (std::abs(j.d_x[a]) > 1e-12 * scale)
        throw InvarianceError("coordinate x" + std::to_string(a + 1) +
                              " is not cyclic: dL/dx = " + std::to_string(j.d_x[a]));
    }
  }
  if (checked == 0) throw ConfigError("no sample point inside the model domain");
}

/// mu_a = dL/dy^a on the cyclic indices.
inline Vec momentum(const LagrangianModel& L, const CyclicSplit& split, const Vec& x,
                    const Vec& y) {
  return split.cyclic_of(L.jet(x, y).d_y);
}

struct MomentumSolveOptions {
  int max_iterations = 50;
};

/// Solves dL/dy^a (x, y^a, y^i) = mu_a for the cyclic velocities by Newton's method on the
/// (d^2L/dy^a dy^b) block. Cyclic positions are irrelevant to L and are set to zero.
inline Vec solve_momentum(const LagrangianModel& L, const CyclicSplit& split, const Vec& mu,
                          const Vec& x_shape, const Vec& y_shape, const Vec& guess = Vec(),
                          const MomentumSolveOptions& opt = {}) {
  const int m = split.m();
  if (mu.size() != m) throw PreconditionError("momentum level has wrong size");
  const Vec x = split.assemble(Vec::Zero(m), x_shape);
  Vec ya = guess.size() == m ? guess : Vec::Zero(m);
  const double tol = 1e-12 * (1.0 + mu.cwiseAbs().maxCoeff());

  auto residual = [&](const Vec& yc, SecondJet* out) {
    SecondJet j = L.jet(x, split.assemble(yc, y_shape));
    Vec r = split.cyclic_of(j.d_y) - mu;
    if (out) *out = std::move(j);
    return r;
  };

  SecondJet j;
  Vec r = residual(ya, &j);
  for (int it = 0; it <= opt.max_iterations; ++it) {
    const double rn = r.cwiseAbs().maxCoeff();
    if (rn <= tol) return ya;
    if (it == opt.max_iterations) break;
    const Mat block = j.d_yy(split.cyclic, split.cyclic);
    const Vec step = solve_symmetric<SingularBlock>(block, r, "cyclic velocity block");
    double lambda = 1.0;
    for (int bt = 0; bt < 30; ++bt, lambda *= 0.5) {
      const Vec trial = ya - lambda * step;
      try {
        SecondJet jt;
        Vec rt = residual(trial, &jt);
        if (rt.cwiseAbs().maxCoeff() < rn || bt == 29) {
          ya = trial;
          r = std::move(rt);
          j = std::move(jt);
          break;
        }
      } catch (const DomainError&) {
        if (bt == 29) throw;
      }
    }
  }
  throw NoConvergence("momentum equation did not converge in " +
                      std::to_string(opt.max_iterations) + " iterations");
}

struct RouthOptions {
  /// Initial guess for the cyclic velocities (default: zero vector).
  Vec guess;
};

/// The Routhian L_mu = L o iota_mu - mu_a iota^a_mu as a model on the shape space. Its jets are
/// composed from L's jets and the implicit derivatives of iota_mu.
inline LagrangianModel routhian(const LagrangianModel& L, const CyclicSplit& split,
                                const Vec& mu, const RouthOptions& opt = {}) {
  if (mu.size() != split.m()) throw PreconditionError("momentum level has wrong size");
  const int s = static_cast<int>(split.shape.size());
  auto base = std::make_shared<const LagrangianModel>(L);
  auto sp = std::make_shared<const CyclicSplit>(split);
  const Vec mu_c = mu;
  const Vec guess = opt.guess;

  auto value = [base, sp, mu_c, guess](const Vec& xs, const Vec& ys) {
    const Vec ya = solve_momentum(*base, *sp, mu_c, xs, ys, guess);
    const Vec x = sp->assemble(Vec::Zero(sp->m()), xs);
    return base->value(x, sp->assemble(ya, ys)) - mu_c.dot(ya);
  };

  auto jet = [base, sp, mu_c, guess, s](const Vec& xs, const Vec& ys) {
    const Vec ya = solve_momentum(*base, *sp, mu_c, xs, ys, guess);
    const Vec x = sp->assemble(Vec::Zero(sp->m()), xs);
    const SecondJet j = base->jet(x, sp->assemble(ya, ys));
    const auto& A = sp->cyclic;
    const auto& S = sp->shape;
    const Mat hAA = j.d_yy(A, A);
    Eigen::LLT<Mat> llt(hAA);
    Eigen::PartialPivLU<Mat> lu(hAA);
    auto solve = [&](const Mat& rhs) -> Mat {
      if (llt.info() == Eigen::Success) return llt.solve(rhs);
      if (!(lu.rcond() > kSingularRcond)) throw SingularBlock("cyclic velocity block is singular");
      return lu.solve(rhs);
    };
    // d iota / d y^j = -h^{ab} h_{bj};  d iota / d x^j = -h^{ab} d^2L/dx^j dy^b.
    const Mat iota_y = -solve(j.d_yy(A, S));
    const Mat iota_x = -solve(j.d_xy(S, A).transpose());

    SecondJet r = SecondJet::zeros(s);
    r.value = j.value - mu_c.dot(ya);
    r.d_x = j.d_x(S);
    r.d_y = j.d_y(S);
    r.d_yy = j.d_yy(S, S) + j.d_yy(S, A) * iota_y;
    r.d_yy = 0.5 * (r.d_yy + r.d_yy.transpose()).eval();
    r.d_xy = j.d_xy(S, S) + iota_x.transpose() * j.d_yy(A, S);
    return r;
  };

  PositionDomain dom;
  if (L.domain()) {
    dom = [base, sp](const Vec& xs) {
      return base->in_domain(sp->assemble(Vec::Zero(sp->m()), xs));
    };
  }
  return LagrangianModel(Family::Routhian, ScalarField(s, value, jet, "routhian"),
                         "Routhian of " + L.description(), std::move(dom));
}

/// Integrates the full system and the Routhian system and reports the largest deviation of the
/// shape components at matched sample times.
inline VerificationReport verify_reduction(const LagrangianModel& L, const CyclicSplit& split,
                                           const Vec& mu, const Vec& x0, const Vec& y0,
                                           double t_end, double tol,
                                           double max_mismatch = 1e-8) {
  const Vec mu0 = momentum(L, split, x0, y0);
  if ((mu0 - mu).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + mu.cwiseAbs().maxCoeff()))
    throw PreconditionError("initial state does not lie on the momentum level mu");
  IntegrateOptions io;
  io.tol = tol;
  io.samples = 1001;
  const Trajectory full = integrate_el(L, x0, y0, t_end, io);
  const LagrangianModel Lmu = routhian(L, split, mu, {split.cyclic_of(y0)});
  const Trajectory red = integrate_el(Lmu, split.shape_of(x0), split.shape_of(y0), t_end, io);

  double mismatch = 0.0;
  double mom_drift = 0.0;
  for (std::size_t k = 0; k < full.size(); ++k) {
    mismatch = std::max(mismatch, (split.shape_of(full.x[k]) - red.x[k]).cwiseAbs().maxCoeff());
    mismatch = std::max(mismatch, (split.shape_of(full.v[k]) - red.v[k]).cwiseAbs().maxCoeff());
    mom_drift = std::max(
        mom_drift, (momentum(L, split, full.x[k], full.v[k]) - mu).cwiseAbs().maxCoeff());
  }
  VerificationReport rep;
  rep.name = "routh_reduction";
  rep.add_le("shape_mismatch", mismatch, max_mismatch);
  rep.add_le("momentum_drift", mom_drift, 1e-8);
  rep.add_le("full_energy_drift", full.max_log_drift(), 1e-8);
  rep.add_le("reduced_energy_drift", red.max_log_drift(), 1e-8);
  return rep;
}

/// Lifts a trajectory of the Routhian back to the full system:
/// x^a(t) = x^a(0) + integral of iota^a_mu along the shape curve (cumulative Simpson on the
/// samples of `reduced`), v^a(t) = iota^a_mu.
inline Trajectory reconstruct(const LagrangianModel& L, const CyclicSplit& split, const Vec& mu,
                              const Trajectory& reduced, const Vec& xa0,
                              const Vec& guess = Vec()) {
  const int m = split.m();
  if (xa0.size() != m) throw PreconditionError("xa0 has wrong size");
  Trajectory out;
  out.log_label = "E_L";
  out.stats = reduced.stats;
  const std::size_t N = reduced.size();
  if (N == 0) return out;

  std::vector<Vec> iota(N);
  Vec warm = guess.size() == m ? guess : Vec::Zero(m);
  double typical_jump = 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    iota[k] = solve_momentum(L, split, mu, reduced.x[k], reduced.v[k], warm);
    if (k > 0) {
      const double jump = (iota[k] - iota[k - 1]).cwiseAbs().maxCoeff();
      if (k > 2 && jump > 1e-6 && jump > 50.0 * typical_jump)
        out.warnings.push_back("possible branch jump of iota_mu near t=" +
                               std::to_string(reduced.times[k]));
      typical_jump = k == 1 ? jump : 0.9 * typical_jump + 0.1 * jump;
    }
    warm = iota[k];
  }

  // Cumulative integral: on each interval the samples of iota_mu are interpolated by the
  // polynomial through the (up to) six nearest nodes, integrated with 4-point Gauss-Legendre
  // (exact for that degree).
  static constexpr double gl_x[4] = {-0.86113631159405258, -0.33998104358485626,
                                     0.33998104358485626, 0.86113631159405258};
  static constexpr double gl_w[4] = {0.34785484513745386, 0.65214515486254614,
                                     0.65214515486254614, 0.34785484513745386};
  std::vector<Vec> xa(N, xa0);
  const auto& t = reduced.times;
  const std::size_t width = std::min<std::size_t>(6, N);
  for (std::size_t k = 0; k + 1 < N; ++k) {
    // Stencil [first, first + width) roughly centred on the interval [t_k, t_k+1].
    std::size_t first = k >= width / 2 - 1 ? k - (width / 2 - 1) : 0;
    first = std::min(first, N - width);
    const double h = t[k + 1] - t[k];
    Vec inc = Vec::Zero(m);
    for (int g = 0; g < 4; ++g) {
      const double s = t[k] + 0.5 * h * (1.0 + gl_x[g]);
      for (std::size_t i = first; i < first + width; ++i) {
        double li = 1.0;
        for (std::size_t j = first; j < first + width; ++j)
          if (j != i) li *= (s - t[j]) / (t[i] - t[j]);
        inc += (0.5 * h * gl_w[g] * li) * iota[i];
      }
    }
    xa[k + 1] = xa[k] + inc;
  }

  for (std::size_t k = 0; k < N; ++k) {
    const Vec x = split.assemble(xa[k], reduced.x[k]);
    const Vec v = split.assemble(iota[k], reduced.v[k]);
    out.push(t[k], x, v, energy(L, x, v));
  }
  return out;
}

}  // namespace routhlab
