#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "routhlab/config.hpp"
#include "routhlab/errors.hpp"
#include "routhlab/io.hpp"
#include "routhlab/routh.hpp"
#include "routhlab/suites.hpp"
#include "routhlab/verify.hpp"

namespace routhlab::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kPass = 0, kVerificationFailed = 1, kUsage = 2, kNumerical = 3 };

struct Context {
  RunConfig cfg;
  fs::path out_dir = "out";
  std::ostream& out;
  std::ostream& err;
};

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline void print_report(std::ostream& os, const VerificationReport& r) {
  for (const auto& m : r.metrics) {
    os << (m.pass ? "  pass  " : "  FAIL  ") << m.label << " = " << fmt(m.value);
    if (m.relation == "<=" || m.relation == ">=") os << " (" << m.relation << " " << fmt(m.tolerance) << ")";
    if (!m.note.empty()) os << "  [" << m.note << "]";
    os << "\n";
  }
  os << (r.overall() ? "PASS " : "FAIL ") << r.name << "\n";
}

inline fs::path write_report(const Context& ctx, const VerificationReport& r,
                             const std::string& file, const nlohmann::ordered_json& extra = {}) {
  nlohmann::ordered_json j = to_json(r);
  j["seed"] = ctx.cfg.seed;
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  const fs::path p = ctx.out_dir / file;
  write_text_file(p, j.dump(2) + "\n");
  return p;
}

inline Vec initial_velocity(const RunConfig& c, const LagrangianModel& L) {
  if (c.x0.size() != L.dim() || c.v0.size() != L.dim())
    throw ConfigError("initial.x and initial.v must have " + std::to_string(L.dim()) +
                      " components");
  if (!c.rescale) return c.v0;
  return rescale_to_energy(L, c.x0, c.v0, c.require_energy());
}

inline IntegrateOptions integrate_options(const RunConfig& c) {
  IntegrateOptions io;
  io.tol = c.tol;
  io.samples = c.samples;
  return io;
}

inline bool wants_disk(const RunConfig& c, const LagrangianModel* L) {
  return c.plot_disk || (L && L->family() == Family::PoincareMagnetic) ||
         c.geodesic.finsler == "ftau";
}

inline void write_svg(const Context& ctx, const Trajectory& t, const std::string& file,
                      const std::string& label, bool disk) {
  if (t.dim() < 2) return;
  PlotOptions po;
  po.unit_disk = disk;
  write_text_file(ctx.out_dir / file, render_svg({plot_curve(t, label)}, po));
}

inline std::vector<Vec> positions_of(const StateSamples& s) {
  std::vector<Vec> p;
  for (const auto& [x, y] : s) p.push_back(x);
  return p;
}

}  // namespace detail

// ---------------------------------------------------------------------------------------------

inline int cmd_describe(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const LagrangianModel L = build_lagrangian(c);
  const StateSamples states = sample_states(L, c.sampling, c.sampling.count, c.seed);

  VerificationReport rep;
  rep.name = "describe";
  double min_eig = std::numeric_limits<double>::infinity();
  bool convex = true;
  double floor = std::numeric_limits<double>::infinity();
  for (const auto& [x, v] : states) {
    const ConvexityResult r = strong_convexity_check(L, x, v);
    convex = convex && r.is_convex;
    min_eig = std::min(min_eig, r.min_eigenvalue);
    floor = std::min(floor, energy(L, x, Vec::Zero(L.dim())));
  }
  rep.add_flag("strongly_convex_at_samples", convex);

  ctx.out << "family: " << family_name(L.family()) << "\n"
          << "dimension: " << L.dim() << "\n"
          << "lagrangian: " << L.description() << "\n"
          << "domain: " << (L.domain_text().empty() ? "R^n" : L.domain_text()) << "\n"
          << "samples: " << states.size() << " (seed " << c.seed << ")\n"
          << "strong convexity: " << (convex ? "pass" : "FAIL")
          << ", min Hessian eigenvalue " << detail::fmt(min_eig) << "\n"
          << "min sampled E_L (energy floor estimate): " << detail::fmt(floor) << "\n";
  if (L.degree() > 0.0) ctx.out << "homogeneity degree k: " << detail::fmt(L.degree()) << "\n";

  nlohmann::ordered_json extra;
  extra["family"] = family_name(L.family());
  extra["dimension"] = L.dim();
  extra["domain"] = L.domain_text().empty() ? "R^n" : L.domain_text();
  extra["min_hessian_eigenvalue"] = min_eig;
  extra["min_sampled_energy"] = floor;
  detail::write_report(ctx, rep, "describe.json", extra);
  return kPass;
}

inline int cmd_integrate_el(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const LagrangianModel L = build_lagrangian(c);
  const Vec v0 = detail::initial_velocity(c, L);
  const Trajectory t = integrate_el(L, c.x0, v0, c.t_end, detail::integrate_options(c));
  write_text_file(ctx.out_dir / "trajectory.csv", to_csv(t));
  detail::write_svg(ctx, t, "trajectory.svg", "EL flow", detail::wants_disk(c, &L));
  ctx.out << "samples: " << t.size() << ", steps: " << t.stats.steps
          << ", rejected: " << t.stats.rejected << "\n"
          << "energy drift: " << detail::fmt(t.max_log_drift()) << "\n"
          << "wrote " << (ctx.out_dir / "trajectory.csv").string() << "\n";
  return kPass;
}

inline int cmd_finslerize(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const LagrangianModel L = build_lagrangian(c);
  const double e = c.require_energy();
  const FinslerModel Fe = jacobi_finsler(L, e);
  std::optional<FinslerModel> closed;
  if (L.coefficients()) closed = randers_closed_form(L, e);
  else if (L.degree() >= 2.0) closed = k_homogeneous_closed_form(L, e);

  const StateSamples states = sample_states(L, c.sampling, c.sampling.count, c.seed);
  const int n = L.dim();
  std::ostringstream os;
  for (int i = 1; i <= n; ++i) os << "x" << i << ",";
  for (int i = 1; i <= n; ++i) os << "y" << i << ",";
  os << "iota0,Fe,Fe_at_2y,closed_form,status\n";
  int reachable = 0, unreachable = 0;
  double worst_closed = 0.0, worst_homog = 0.0;
  for (const auto& [x, y] : states) {
    for (int i = 0; i < n; ++i) os << format_real(x[i]) << ",";
    for (int i = 0; i < n; ++i) os << format_real(y[i]) << ",";
    try {
      const double iota = solve_iota0(L, e, x, y).iota0;
      const double f = Fe.value(x, y);
      const double f2 = Fe.value(x, 2.0 * y);
      worst_homog = std::max(worst_homog, rel_diff(f2, 2.0 * f));
      os << format_real(iota) << "," << format_real(f) << "," << format_real(f2) << ",";
      if (closed) {
        const double cf = closed->value(x, y);
        worst_closed = std::max(worst_closed, std::abs(f - cf) / std::abs(cf));
        os << format_real(cf);
      }
      os << ",ok\n";
      ++reachable;
    } catch (const EnergyUnreachable&) {
      os << ",,,,EnergyUnreachable\n";
      ++unreachable;
    } catch (const DomainError&) {
      os << ",,,,DomainError\n";
      ++unreachable;
    }
  }
  write_text_file(ctx.out_dir / "finsler.csv", os.str());
  ctx.out << "cells: " << states.size() << " (" << reachable << " reachable, " << unreachable
          << " unreachable)\n"
          << "homogeneity (lambda=2) max relative error: " << detail::fmt(worst_homog) << "\n";
  if (closed)
    ctx.out << "max relative deviation from " << provenance_name(closed->provenance())
            << " closed form: " << detail::fmt(worst_closed) << "\n";
  ctx.out << "wrote " << (ctx.out_dir / "finsler.csv").string() << "\n";
  return kPass;
}

inline int cmd_geodesic(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const bool use_ftau = c.geodesic.finsler == "ftau";
  const LagrangianModel L = use_ftau ? poincare_magnetic() : build_lagrangian(c);
  const FinslerModel F = build_finsler(c, L);
  if (c.x0.size() != F.dim() || c.v0.size() != F.dim())
    throw ConfigError("initial.x and initial.v must match the Finsler model dimension");
  GeodesicOptions go;
  go.integrate = detail::integrate_options(c);
  if (c.geodesic.parametrization == "tangent") {
    double e;
    if (use_ftau) {
      if (!(c.geodesic.tau > 0.0)) throw ConfigError("tangent parametrization needs tau > 0");
      e = 1.0 / (c.geodesic.tau * c.geodesic.tau);
    } else {
      e = c.require_energy();
    }
    go.parametrization = Parametrization::TangentToLevel;
    go.level = iota0_level(L, e);
  }
  const Trajectory t = integrate_geodesic(F, c.x0, c.v0, c.t_end, go);
  write_text_file(ctx.out_dir / "geodesic.csv", to_csv(t));
  detail::write_svg(ctx, t, "geodesic.svg", F.description(), detail::wants_disk(c, &L));
  ctx.out << "model: " << F.description() << "\n"
          << "samples: " << t.size() << ", steps: " << t.stats.steps << "\n"
          << "F drift: " << detail::fmt(t.max_log_drift()) << "\n";
  if (t.dim() == 2 && t.size() >= 3) {
    const CircleFit fit = circle_fit(planar_points(t));
    if (fit.collinear) {
      ctx.out << "curve: straight line, rms residual " << detail::fmt(fit.rms_residual) << "\n";
    } else {
      ctx.out << "curve: circle, center (" << detail::fmt(fit.center.x()) << ", "
              << detail::fmt(fit.center.y()) << "), radius " << detail::fmt(fit.radius)
              << ", rms residual " << detail::fmt(fit.rms_residual) << "\n";
    }
  }
  ctx.out << "wrote " << (ctx.out_dir / "geodesic.csv").string() << "\n";
  return kPass;
}

inline VerificationReport run_checks(const RunConfig& c) {
  std::vector<std::string> checks = c.verify.checks;
  if (checks.empty()) checks = {"theorem"};
  VerificationReport all;
  all.name = "verify";
  const bool ftau_only =
      std::all_of(checks.begin(), checks.end(), [](const std::string& s) { return s == "ftau"; });
  std::optional<LagrangianModel> L;
  if (!ftau_only) L = build_lagrangian(c);
  std::uint64_t sub = c.seed;
  auto states = [&](int count) { return sample_states(*L, c.sampling, count, ++sub); };

  for (const std::string& name : checks) {
    if (name == "theorem") {
      const double e = c.require_energy();
      const Vec v0 = detail::initial_velocity(c, *L);
      TheoremCheckOptions opt;
      opt.samples = c.samples;
      all.merge(theorem_check(*L, e, c.x0, v0, c.t_end, opt), "theorem");
    } else if (name == "ftau") {
      std::vector<double> taus = c.verify.taus;
      if (taus.empty()) taus = {0.0, 0.25, 0.5, 1.0};
      std::vector<FtauStart> starts = c.verify.ftau_starts;
      if (starts.empty()) {
        FtauStart s;
        s.x = Vec(2);
        s.x << 0.3, 0.0;
        s.y = Vec(2);
        s.y << 0.0, 1.0;
        starts.push_back(s);
      }
      for (double tau : taus) {
        for (std::size_t k = 0; k < starts.size(); ++k) {
          all.merge(ftau_geodesic_check(tau, starts[k].x, starts[k].y, starts[k].t_end),
                    "ftau[tau=" + detail::fmt(tau) + ",start=" + std::to_string(k) + "]");
        }
      }
    } else if (name == "autodiff") {
      all.merge(suite_autodiff(L->field(), states(c.sampling.count)), "autodiff");
    } else if (name == "homogeneity") {
      all.merge(suite_euler_homogeneity(jacobi_finsler(*L, c.require_energy()),
                                        states(c.sampling.count)),
                "homogeneity");
    } else if (name == "spray") {
      all.merge(suite_spray_homogeneity(jacobi_finsler(*L, c.require_energy()),
                                        states(c.sampling.count)),
                "spray");
    } else if (name == "quasi_definite") {
      all.merge(suite_quasi_definite(jacobi_finsler(*L, c.require_energy()),
                                     states(c.sampling.count)),
                "quasi_definite");
    } else if (name == "randers") {
      const double e = c.require_energy();
      all.merge(suite_closed_form(jacobi_finsler(*L, e), randers_closed_form(*L, e),
                                  states(c.sampling.count)),
                "randers");
      if (!L->coefficients()) throw ConfigError("randers check needs a simple or magnetic model");
      all.merge(suite_randers_global(*L->coefficients(), e,
                                     detail::positions_of(states(c.sampling.count)), ++sub),
                "randers");
    } else if (name == "k_closed_form") {
      const double e = c.require_energy();
      all.merge(suite_closed_form(jacobi_finsler(*L, e), k_homogeneous_closed_form(*L, e),
                                  states(c.sampling.count)),
                "k_closed_form");
    } else if (name == "conservation") {
      all.merge(suite_energy_conservation(*L, states(std::min(c.sampling.count, 8)), c.t_end,
                                          c.tol),
                "conservation");
    } else {
      throw ConfigError("unknown verify check \"" + name + "\"");
    }
  }
  return all;
}

inline int cmd_verify(Context& ctx) {
  const VerificationReport rep = run_checks(ctx.cfg);
  detail::print_report(ctx.out, rep);
  const fs::path p = detail::write_report(ctx, rep, "report.json");
  ctx.out << "wrote " << p.string() << "\n";
  return rep.overall() ? kPass : kVerificationFailed;
}

inline int cmd_routh(Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const LagrangianModel L = build_lagrangian(c);
  const int n = L.dim();
  const CyclicSplit split = CyclicSplit::make(n, c.routh.cyclic);
  check_cyclic_invariance(L, split, sample_states(L, c.sampling, c.sampling.count, c.seed));
  if (c.x0.size() != n || c.v0.size() != n)
    throw ConfigError("initial.x and initial.v must have " + std::to_string(n) + " components");
  const Vec mu = c.routh.mu ? *c.routh.mu : momentum(L, split, c.x0, c.v0);

  VerificationReport rep = verify_reduction(L, split, mu, c.x0, c.v0, c.t_end, c.tol);
  rep.name = "routh";

  IntegrateOptions io = detail::integrate_options(c);
  const Trajectory full = integrate_el(L, c.x0, c.v0, c.t_end, io);
  const LagrangianModel Lmu = routhian(L, split, mu, {split.cyclic_of(c.v0)});
  const Trajectory red =
      integrate_el(Lmu, split.shape_of(c.x0), split.shape_of(c.v0), c.t_end, io);
  const Trajectory rec = reconstruct(L, split, mu, red, split.cyclic_of(c.x0),
                                     split.cyclic_of(c.v0));
  double dev = 0.0;
  for (std::size_t k = 0; k < std::min(full.size(), rec.size()); ++k) {
    dev = std::max(dev, (full.x[k] - rec.x[k]).cwiseAbs().maxCoeff());
    dev = std::max(dev, (full.v[k] - rec.v[k]).cwiseAbs().maxCoeff());
  }
  rep.add_le("round_trip_deviation", dev, 1e-7);
  for (const auto& w : rec.warnings) ctx.err << "warning: " << w << "\n";

  write_text_file(ctx.out_dir / "reduced.csv", to_csv(red));
  write_text_file(ctx.out_dir / "reconstructed.csv", to_csv(rec));
  ctx.out << "reduced dimension: " << split.n() - split.m() << ", momentum level: [";
  for (Eigen::Index a = 0; a < mu.size(); ++a) ctx.out << (a ? ", " : "") << detail::fmt(mu[a]);
  ctx.out << "]\n";
  detail::print_report(ctx.out, rep);
  nlohmann::ordered_json extra;
  extra["reduced_dimension"] = split.n() - split.m();
  extra["warnings"] = rec.warnings;
  detail::write_report(ctx, rep, "routh.json", extra);
  return rep.overall() ? kPass : kVerificationFailed;
}

inline int cmd_plot(Context& ctx, const std::vector<std::string>& inputs, bool disk) {
  if (inputs.empty()) throw ConfigError("plot needs at least one trajectory CSV");
  std::vector<PlotCurve> curves;
  for (const auto& f : inputs) curves.push_back(plot_curve(read_csv_file(f), fs::path(f).stem().string()));
  PlotOptions po;
  po.unit_disk = disk;
  const fs::path p = ctx.out_dir / "plot.svg";
  write_text_file(p, render_svg(curves, po));
  ctx.out << "wrote " << p.string() << "\n";
  return kPass;
}

// ---------------------------------------------------------------------------------------------

/// Runs one command; returns the process exit code. `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"Jacobi-Finsler and Routh reduction toolkit", "routhlab"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> plot_inputs;
  bool disk = false;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"describe", "Summarize a model: family, domain, convexity, energy floor"},
      {"integrate-el", "Integrate the Euler-Lagrange flow and write a trajectory CSV"},
      {"finslerize", "Tabulate iota0_e and F_e on sampled points"},
      {"geodesic", "Integrate a geodesic of the selected Finsler model"},
      {"verify", "Run the configured checks and write a JSON report"},
      {"routh-reduce", "Reduce cyclic coordinates, integrate and reconstruct"},
      {"plot", "Plot trajectory CSVs to SVG"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    auto* opt = sub->add_option("--config", config_path, "Run configuration (JSON)");
    if (name != "plot") opt->required();
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--seed", seed, "Seed for sampled checks (overrides the config)");
    if (name == "plot") {
      sub->add_option("inputs", plot_inputs, "Trajectory CSV files");
      sub->add_flag("--disk", disk, "Draw the unit circle");
    }
  }

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size());
  for (auto it = args.rbegin(); it != args.rend(); ++it) argv_store.push_back(*it);
  try {
    app.parse(argv_store);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kPass;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    Context ctx{{}, out_dir, out, err};
    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (!config_path.empty()) ctx.cfg = load_config(config_path);
    if (seed) ctx.cfg.seed = *seed;
    if (name == "plot") {
      std::vector<std::string> inputs = plot_inputs;
      if (!config_path.empty()) {
        const fs::path base = fs::path(config_path).parent_path();
        for (const auto& f : ctx.cfg.plot_inputs) inputs.push_back((base / f).string());
      }
      return cmd_plot(ctx, inputs, disk || ctx.cfg.plot_disk);
    }
    if (name == "describe") return cmd_describe(ctx);
    if (name == "integrate-el") return cmd_integrate_el(ctx);
    if (name == "finslerize") return cmd_finslerize(ctx);
    if (name == "geodesic") return cmd_geodesic(ctx);
    if (name == "verify") return cmd_verify(ctx);
    if (name == "routh-reduce") return cmd_routh(ctx);
    err << "error: unknown command " << name << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kNumerical;
  } catch (const nlohmann::json::exception& e) {
    err << "error: invalid config value: " << e.what() << "\n";
    return kUsage;
  }
}

inline int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace routhlab::cli
