// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "routhlab/cli.hpp"
#include "support.hpp"

using namespace routhlab;
using rt::vec;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;
using StopFn = std::function<bool(double, const Vec&, const Vec&)>;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string failing_metrics(const VerificationReport& r) {
  std::string s;
  for (const auto& m : r.metrics)
    if (!m.pass) s += " " + m.label + "=" + fmt(m.value) + (m.note.empty() ? "" : "(" + m.note + ")");
  return s;
}

// Trajectory from (x0, v0) of a second-order flow, cut where the summed chord length reaches
// `length`, then resampled densely up to that time.
template <class Integrate>
Trajectory up_to_length(Integrate integrate, const Vec& x0, double length, int samples) {
  double travelled = 0.0;
  Vec last = x0;
  auto stop = [&](double, const Vec& x, const Vec&) {
    travelled += (x - last).norm();
    last = x;
    return travelled >= length;
  };
  const Trajectory probe = integrate(100.0, 0, stop);
  return integrate(probe.times.back(), samples, nullptr);
}

// 1. Jacobi metric geodesics are the energy-e trajectories of a simple Lagrangian.
Outcome ac1() {
  const auto t0 = Clock::now();
  const double e = 1.25;
  // Flat metric, V = |x|^2 / 2 on the chart |x| < 1.55 where max V = 1.20125 < e.
  auto chart = [](const Vec& x) { return x.norm() < 1.55; };
  const LagrangianModel L = simple_mechanical(euclidean_metric(2), rt::half_square(2), chart);
  double max_v = 0.0;
  for (double r = 0.0; r < 1.55; r += 1e-3) max_v = std::max(max_v, 0.5 * r * r);
  const Vec x0 = vec({0.5, 0.0});
  const Vec v0 = vec({0.0, 1.5});
  const double e0 = energy(L, x0, v0);

  IntegrateOptions io;
  io.tol = 1e-12;
  const Trajectory el = up_to_length(
      [&](double T, int n, StopFn stop) {
        IntegrateOptions o = io;
        o.samples = n;
        o.stop = stop;
        return integrate_el(L, x0, v0, T, o);
      },
      x0, 2.0, 4001);

  const FinslerModel jacobi = randers_closed_form(*L.coefficients(), e, L.domain());
  GeodesicOptions go;
  go.integrate.tol = 1e-12;
  const Trajectory geo = up_to_length(
      [&](double T, int n, StopFn stop) {
        GeodesicOptions g = go;
        g.integrate.samples = n;
        g.integrate.stop = stop;
        return integrate_geodesic(jacobi, x0, v0, T, g);
      },
      x0, 2.0, 8001);

  const double d = point_set_distance(el, geo);
  const double secs = seconds_since(t0);
  const bool ok = max_v < e && std::abs(e0 - e) < 1e-14 && d <= 1e-6 && secs < 5.0;
  return {ok, "point_set_distance=" + fmt(d) + " (<= 1e-6), EL length=" + fmt(arc_length(el)) +
                  ", geodesic length=" + fmt(arc_length(geo)) + ", max V on chart=" +
                  fmt(max_v) + ", runtime=" + fmt(secs) + "s (< 5s)"};
}

// 2. k-homogeneous closed form.
Outcome ac2() {
  rt::Rng rng(2024);
  double worst = 0.0;
  int points = 0;
  for (double k : {2.0, 3.0, 4.0}) {
    const LagrangianModel L = k_homogeneous(
        metric_power(conformal_metric(CoordMap::make(2, 1,
                                                     [](auto x, auto out) {
                                                       using std::exp;
                                                       out[0] = exp(0.4 * x[0] - 0.3 * x[1]) +
                                                                0.5 * x[0] * x[0];
                                                     })),
                     k),
        k);
    for (int s = 0; s < 1000; ++s) {
      const double e = rng.uniform(0.2, 5.0);
      const Vec x = rng.uniform_vec(2, -1, 1), y = rng.normal_vec(2);
      const double expected =
          k * std::pow((k - 1) / e, (1 - k) / k) * std::pow(L.value(x, y), 1.0 / k);
      const double got = jacobi_finsler(L, e).value(x, y);
      worst = std::max(worst, std::abs(got - expected) / expected);
      ++points;
    }
  }
  return {worst <= 1e-10,
          "max relative error=" + fmt(worst) + " (<= 1e-10) over " + std::to_string(points) +
              " points, k in {2,3,4}"};
}

// 3. Randers closed form and the global criterion.
Outcome ac3() {
  rt::Rng rng(77);
  // beta = (a0 sin x2 + a1 x1, a2 x1^2 + a3 cos x1) with random coefficients.
  std::array<double, 4> a{};
  for (double& c : a) c = rng.uniform(-1, 1);
  MagneticCoefficients c;
  c.metric = conformal_metric(CoordMap::make(2, 1, [](auto x, auto out) {
    using std::exp;
    out[0] = exp(0.5 * x[0]) * (1.0 + 0.25 * x[1] * x[1]);
  }));
  c.one_form = CoordMap::make(2, 2, [a](auto x, auto out) {
    using std::cos;
    using std::sin;
    out[0] = a[0] * sin(x[1]) + a[1] * x[0];
    out[1] = a[2] * x[0] * x[0] + a[3] * cos(x[0]);
  });
  c.potential = CoordMap::make(2, 1, [](auto x, auto out) {
    using std::sin;
    out[0] = 0.3 * sin(x[0] * x[1]);
  });
  const LagrangianModel L = magnetic(c);
  const double e = 1.5;
  const FinslerModel num = jacobi_finsler(L, e);
  const FinslerModel closed = randers_closed_form(c, e);
  double worst = 0.0;
  for (int s = 0; s < 1000; ++s) {
    const Vec x = rng.uniform_vec(2, -1, 1), y = rng.normal_vec(2);
    const double b = closed.value(x, y);
    worst = std::max(worst, std::abs(num.value(x, y) - b) / std::abs(b));
  }

  std::vector<Vec> positions;
  for (int s = 0; s < 400; ++s) positions.push_back(rng.uniform_vec(2, -1, 1));
  int agree = 0, global = 0;
  const std::vector<double> levels = {0.2, 0.5, 0.8, 1.0, 1.5, 2.0, 3.0, 5.0};
  for (double lvl : levels) {
    const VerificationReport r = suite_randers_global(c, lvl, positions, 5);
    agree += r.overall();
    global += randers_global_criterion(c, lvl, positions).is_global;
  }
  const bool ok = worst <= 1e-10 && agree == static_cast<int>(levels.size()) && global > 0 &&
                  global < static_cast<int>(levels.size());
  return {ok, "max relative error=" + fmt(worst) + " (<= 1e-10) over 1000 points; criterion " +
                  "agrees with sampled positivity at " + std::to_string(agree) + "/" +
                  std::to_string(levels.size()) + " energy levels (" + std::to_string(global) +
                  " global)"};
}

// 4. Disk example: circles, boundary angles, horocycles and the EL comparison.
Outcome ac4() {
  bool ok = true;
  std::string detail;
  const Vec x0 = vec({0.3, 0.0}), y0 = vec({0.0, 1.0});
  for (double tau : {0.0, 0.25, 0.5, 1.0}) {
    const VerificationReport r = ftau_geodesic_check(tau, x0, y0, 1.0);
    ok = ok && r.overall();
    detail += " tau=" + fmt(tau) + ":";
    for (const auto& m : r.metrics) detail += " " + m.label + "=" + fmt(m.value);
    if (!r.overall()) detail += " [FAILED:" + failing_metrics(r) + "]";
    const bool has_el = r.find("el_vs_geodesic_point_set_distance") != nullptr;
    ok = ok && (has_el == (tau > 0.0));
    if (tau == 0.0) ok = ok && r.find("boundary_angle_error_deg") != nullptr;
    if (tau == 1.0) ok = ok && r.find("contact_distance") != nullptr;
  }
  return {ok, detail};
}

// 5. Randomized theorem matrix.
struct Case {
  std::string family;
  LagrangianModel L;
  Vec x0;
  Vec dir;
  double e;
  double t_end;
};

Outcome ac5() {
  const auto t0 = Clock::now();
  rt::Rng rng(5150);
  std::vector<Case> cases;
  for (int i = 0; cases.size() < 50; ++i) {
    const int fam = i % 5;
    Case c;
    if (fam == 0) {
      // Simple: random SPD constant metric, random quadratic plus quartic potential.
      const double p = rng.uniform(0.5, 2.0), q = rng.uniform(-0.3, 0.3), r = rng.uniform(0.5, 2.0);
      const double k1 = rng.uniform(0.2, 2.0), k2 = rng.uniform(0.2, 2.0), k3 = rng.uniform(0, 0.5);
      c.family = "simple";
      c.L = simple_mechanical(CoordMap::constant(2, {p, q, q, r}),
                              CoordMap::make(2, 1, [k1, k2, k3](auto x, auto out) {
                                out[0] = 0.5 * k1 * x[0] * x[0] + 0.5 * k2 * x[1] * x[1] +
                                         k3 * x[0] * x[0] * x[1] * x[1];
                              }));
      c.x0 = rng.uniform_vec(2, -0.5, 0.5);
    } else if (fam == 1) {
      // Magnetic with conformal metric and random one-form.
      const double a0 = rng.uniform(-1, 1), a1 = rng.uniform(-1, 1), a2 = rng.uniform(-1, 1);
      MagneticCoefficients m;
      m.metric = conformal_metric(CoordMap::make(2, 1, [a2](auto x, auto out) {
        using std::exp;
        out[0] = exp(0.3 * a2 * x[0] + 0.2 * x[1]);
      }));
      m.one_form = CoordMap::make(2, 2, [a0, a1](auto x, auto out) {
        using std::sin;
        out[0] = a0 * sin(x[1]);
        out[1] = a1 * x[0] * x[0];
      });
      m.potential = CoordMap::make(2, 1, [](auto x, auto out) { out[0] = 0.25 * x[0] * x[1]; });
      c.family = "magnetic";
      c.L = magnetic(m);
      c.x0 = rng.uniform_vec(2, -0.5, 0.5);
    } else if (fam == 2) {
      c.family = "poincare_magnetic";
      c.L = poincare_magnetic();
      c.x0 = rng.in_disk(0.5);
    } else if (fam == 3) {
      const double k = 3.0 + (i / 5) % 2;
      c.family = "k_homogeneous(k=" + fmt(k) + ")";
      c.L = k_homogeneous(
          metric_power(conformal_metric(CoordMap::make(2, 1,
                                                       [](auto x, auto out) {
                                                         using std::exp;
                                                         out[0] = exp(0.3 * x[0] - 0.2 * x[1]);
                                                       })),
                       k),
          k);
      c.x0 = rng.uniform_vec(2, -0.5, 0.5);
    } else {
      const double s = rng.uniform(0.05, 0.2), w = rng.uniform(0.0, 0.5);
      std::ostringstream os;
      os.precision(17);
      os << "0.5*(1 + 0.3*x2^2)*v1^2 + 0.5*v2^2 + " << s << "*(v1^2 + v2^2)^2 + " << w
         << "*(x1*v2 - x2*v1) - 0.5*(x1^2 + x2^2)";
      c.family = "expression";
      c.L = parse_lagrangian(os.str(), 2);
      c.x0 = rng.uniform_vec(2, -0.5, 0.5);
    }
    c.dir = rng.normal_vec(2);
    // Attainable energy: above E_L(x0, 0) (and positive for the homogeneous families). For the
    // magnetic families the canonical spray of F_e^2 / 2 needs F_e > 0, so e is also kept above
    // the Randers criterion on the region the trajectory can reach.
    double floor = c.L.degree() > 0 ? 0.0 : std::max(energy(c.L, c.x0, Vec::Zero(2)), 0.0);
    if (c.L.coefficients() && c.L.coefficients()->one_form.valid()) {
      std::vector<Vec> region;
      const double r = fam == 2 ? 0.999 : 1.0;
      for (int s = 0; s < 2000; ++s) region.push_back(fam == 2 ? rng.in_disk(r) : rng.uniform_vec(2, -r, r));
      // margin = e - max(1/2 |beta|_g^2 + V), so the critical level is e - margin.
      const GlobalCriterion gc = randers_global_criterion(*c.L.coefficients(), floor, region);
      floor = std::max(floor, floor - gc.margin);
    }
    c.e = floor + rng.uniform(0.2, 2.0);
    c.t_end = 0.0;
    cases.push_back(std::move(c));
  }

  int passed = 0;
  std::string failures;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    Case& c = cases[i];
    try {
      const Vec v0 = rescale_to_energy(c.L, c.x0, c.dir, c.e);
      // Duration covering roughly 0.4 of arc length.
      const double T = 0.4 / v0.norm();
      TheoremCheckOptions opt;
      opt.samples = 1001;
      const VerificationReport r = theorem_check(c.L, c.e, c.x0, v0, T, opt);
      if (r.overall()) {
        ++passed;
      } else {
        failures += " case" + std::to_string(i) + "[" + c.family + "]:" + failing_metrics(r);
      }
    } catch (const Error& err) {
      failures += " case" + std::to_string(i) + "[" + c.family + "]: " + err.what();
    }
  }
  const double secs = seconds_since(t0);
  return {passed == 50 && secs < 120.0,
          std::to_string(passed) + "/50 cases pass, runtime=" + fmt(secs) + "s (< 120s)" +
              failures};
}

// 6. Routh reduction round trip for a central force.
Outcome ac6() {
  const LagrangianModel L = rt::polar_kepler();
  const CyclicSplit split = CyclicSplit::make(2, {1});
  const Vec x0 = vec({1.0, 0.4}), v0 = vec({0.3, 0.9});
  const Vec mu = momentum(L, split, x0, v0);
  IntegrateOptions io;
  io.tol = 1e-12;
  io.samples = 1001;
  const double t_end = 10.0;
  const Trajectory full = integrate_el(L, x0, v0, t_end, io);
  const LagrangianModel Lmu = routhian(L, split, mu, {split.cyclic_of(v0)});
  const Trajectory red = integrate_el(Lmu, split.shape_of(x0), split.shape_of(v0), t_end, io);
  const Trajectory rec = reconstruct(L, split, mu, red, split.cyclic_of(x0), split.cyclic_of(v0));
  double dev = 0.0;
  for (std::size_t k = 0; k < full.size(); ++k) {
    dev = std::max(dev, (full.x[k] - rec.x[k]).cwiseAbs().maxCoeff());
    dev = std::max(dev, (full.v[k] - rec.v[k]).cwiseAbs().maxCoeff());
  }
  const bool ok = full.size() == rec.size() && dev <= 1e-7;
  return {ok, "max deviation=" + fmt(dev) + " (<= 1e-7) over t_end=10, mu=" + fmt(mu[0])};
}

// 7. Invariant suites at 1000 samples each.
Outcome ac7() {
  const LagrangianModel L = magnetic(rt::conformal_magnetic_coefficients());
  const double e = 1.5;
  const FinslerModel Fe = jacobi_finsler(L, e);
  rt::Rng rng(7);
  // |y| in [0.5, 2] with uniform direction: the finite-difference oracle uses absolute steps, and
  // homogeneity makes the direction the only essential fibre variable.
  StateSamples states;
  for (int s = 0; s < 1000; ++s) {
    const Vec x = rng.uniform_vec(2, -1, 1);
    const double angle = rng.uniform(0.0, 2.0 * M_PI);
    states.emplace_back(x, rng.uniform(0.5, 2.0) * vec({std::cos(angle), std::sin(angle)}));
  }
  // Conservation runs start on the energy level e inside [-1/2, 1/2]^2. The metric exp(x1) I
  // degenerates as x1 -> -inf and geodesics aimed that way leave every chart in finite time.
  StateSamples on_level;
  for (const auto& [x, y] : states) {
    const Vec x0 = 0.5 * x;
    on_level.emplace_back(x0, rescale_to_energy(L, x0, y, e));
  }

  std::vector<VerificationReport> reps;
  reps.push_back(suite_euler_homogeneity(Fe, states, 1e-10));
  reps.push_back(suite_spray_homogeneity(Fe, states, 1e-8));
  reps.push_back(suite_energy_conservation(L, on_level, 0.25, 1e-11, 1e-8));
  reps.push_back(suite_geodesic_conservation(Fe, on_level, 0.25, 1e-11, 1e-8));
  reps.push_back(suite_autodiff(L.field(), states, 1e-6));
  reps.push_back(suite_autodiff(Fe.checked_field(), states, 1e-6));
  reps.push_back(suite_quasi_definite(Fe, states));
  bool ok = true;
  std::string detail;
  for (const auto& r : reps) {
    ok = ok && r.overall();
    for (const auto& m : r.metrics) {
      // Every sampled point must have been evaluated.
      if (m.note.find("skipped") != std::string::npos)
        ok = ok && m.note.find(", 0 skipped") != std::string::npos;
      detail += " " + r.name + "." + m.label + "=" + fmt(m.value) + (m.pass ? "" : "[FAIL]");
      if (!m.note.empty()) detail += "(" + m.note + ")";
    }
  }
  return {ok, detail};
}

// 8. Negative controls through the command line entry point.
Outcome ac8() {
  const fs::path dir = fs::path(ROUTHLAB_CONFIG_DIR) / "tamper";
  const fs::path out = fs::temp_directory_path() / "routhlab_acceptance";
  struct Expect {
    const char* cmd;
    const char* file;
    int code;
  };
  const Expect cases[] = {{"verify", "wrong_energy.json", cli::kVerificationFailed},
                          {"routh-reduce", "non_cyclic_index.json", cli::kUsage},
                          {"verify", "below_energy_floor.json", cli::kNumerical}};
  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    std::ostringstream so, se;
    const int code =
        cli::run({c.cmd, "--config", (dir / c.file).string(), "--out", out.string()}, so, se);
    ok = ok && code == c.code;
    detail += std::string(" ") + c.file + ": exit " + std::to_string(code) + " (expected " +
              std::to_string(c.code) + ")";
  }
  return {ok, detail};
}

}  // namespace

int main() {
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"AC1 Jacobi metric geodesic vs EL trajectory", ac1},
      {"AC2 k-homogeneous closed form", ac2},
      {"AC3 Randers closed form and global criterion", ac3},
      {"AC4 F_tau circles, boundary angles, EL comparison", ac4},
      {"AC5 randomized theorem matrix", ac5},
      {"AC6 Routh reduction round trip", ac6},
      {"AC7 invariant suites", ac7},
      {"AC8 negative controls", ac8}};
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(),
                seconds_since(t0));
  }
  std::printf("%d/%zu criteria pass\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
