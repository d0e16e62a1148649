#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "routhlab/errors.hpp"
#include "routhlab/expression.hpp"
#include "routhlab/homogenize.hpp"
#include "routhlab/io.hpp"
#include "routhlab/lagrangian.hpp"

namespace routhlab {

using Json = nlohmann::json;

/// Position-only map whose components are DSL expressions in x1..xn.
inline CoordMap expression_map(int dim, const std::vector<std::string>& texts) {
  auto exprs = std::make_shared<std::vector<Expression>>();
  for (const auto& t : texts) {
    Expression e = Expression::parse(t, dim);
    if (e.uses_velocity()) throw ConfigError("'" + t + "' may only use x1..x" + std::to_string(dim));
    exprs->push_back(std::move(e));
  }
  const int m = static_cast<int>(texts.size());
  return CoordMap::make(dim, m, [exprs](auto x, auto out) {
    using T = typename decltype(out)::value_type;
    for (std::size_t i = 0; i < exprs->size(); ++i)
      out[i] = (*exprs)[i].template eval<T>(x, std::span<const T>());
  });
}

struct ModelConfig {
  std::string family = "simple";
  int dim = 0;
  Json metric;  // "flat", {"conformal": expr} or an n x n array of expressions
  Json beta;    // array of n expressions
  Json potential;
  std::string expression;
  std::string domain;
  double k = 0.0;
};

struct GeodesicConfig {
  std::string finsler = "numeric";  // numeric | randers | k_homogeneous | ftau
  double tau = 1.0;
  std::string parametrization = "canonical";  // canonical | tangent
};

struct FtauStart {
  Vec x;
  Vec y;
  double t_end = 1.0;
};

struct VerifyConfig {
  std::vector<std::string> checks;
  std::vector<double> taus;
  std::vector<FtauStart> ftau_starts;
};

struct RouthConfig {
  std::vector<int> cyclic;  // zero-based
  std::optional<Vec> mu;
};

struct SamplingConfig {
  double lo = -0.5;
  double hi = 0.5;
  int count = 200;
};

struct RunConfig {
  ModelConfig model;
  std::optional<double> energy;
  Vec x0;
  Vec v0;
  bool rescale = false;
  double t_end = 5.0;
  double tol = 1e-11;
  int samples = 1001;
  GeodesicConfig geodesic;
  VerifyConfig verify;
  RouthConfig routh;
  SamplingConfig sampling;
  std::uint64_t seed = 1;
  std::vector<std::string> plot_inputs;
  bool plot_disk = false;

  double require_energy() const {
    if (!energy) throw ConfigError("config needs an \"energy\" value");
    return *energy;
  }
};

namespace detail {

inline const Json* find_key(const Json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

inline double as_real(const Json& j, const std::string& what) {
  if (!j.is_number()) throw ConfigError(what + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(what + " must be finite");
  return v;
}

inline Vec as_vec(const Json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + " must be an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = as_real(j[i], what);
  return v;
}

inline std::string as_expr(const Json& j, const std::string& what) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number()) return format_real(j.get<double>());
  throw ConfigError(what + " must be an expression string or a number");
}

inline void check_keys(const Json& j, const std::set<std::string>& allowed,
                       const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
}

inline void parse_error_position(const std::string& text, std::size_t byte, int& line, int& col) {
  line = 1;
  col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
}

}  // namespace detail

inline RunConfig parse_config(const Json& j) {
  using namespace detail;
  check_keys(j,
             {"lagrangian", "energy", "initial", "integrator", "geodesic", "verify", "routh",
              "sampling", "seed", "plot", "description"},
             "config");
  RunConfig c;
  if (const Json* l = find_key(j, "lagrangian")) {
    check_keys(*l, {"family", "dim", "metric", "beta", "potential", "expression", "domain", "k"},
               "lagrangian");
    if (const Json* f = find_key(*l, "family")) c.model.family = f->get<std::string>();
    if (const Json* d = find_key(*l, "dim")) {
      if (!d->is_number_integer()) throw ConfigError("lagrangian.dim must be an integer");
      c.model.dim = d->get<int>();
    }
    if (const Json* m = find_key(*l, "metric")) c.model.metric = *m;
    if (const Json* b = find_key(*l, "beta")) c.model.beta = *b;
    if (const Json* p = find_key(*l, "potential")) c.model.potential = *p;
    if (const Json* e = find_key(*l, "expression")) c.model.expression = as_expr(*e, "expression");
    if (const Json* d = find_key(*l, "domain")) c.model.domain = as_expr(*d, "domain");
    if (const Json* k = find_key(*l, "k")) c.model.k = as_real(*k, "lagrangian.k");
  } else {
    throw ConfigError("config needs a \"lagrangian\" section");
  }
  if (const Json* e = find_key(j, "energy")) c.energy = as_real(*e, "energy");
  if (const Json* i = find_key(j, "initial")) {
    check_keys(*i, {"x", "v", "rescale"}, "initial");
    if (const Json* x = find_key(*i, "x")) c.x0 = as_vec(*x, "initial.x");
    if (const Json* v = find_key(*i, "v")) c.v0 = as_vec(*v, "initial.v");
    if (const Json* r = find_key(*i, "rescale")) c.rescale = r->get<bool>();
  }
  if (const Json* in = find_key(j, "integrator")) {
    check_keys(*in, {"t_end", "tol", "samples"}, "integrator");
    if (const Json* t = find_key(*in, "t_end")) c.t_end = as_real(*t, "integrator.t_end");
    if (const Json* t = find_key(*in, "tol")) c.tol = as_real(*t, "integrator.tol");
    if (const Json* s = find_key(*in, "samples")) c.samples = s->get<int>();
    if (!(c.t_end >= 0.0)) throw ConfigError("integrator.t_end must be >= 0");
    if (!(c.tol > 0.0)) throw ConfigError("integrator.tol must be > 0");
    if (c.samples < 2) throw ConfigError("integrator.samples must be >= 2");
  }
  if (const Json* g = find_key(j, "geodesic")) {
    check_keys(*g, {"finsler", "tau", "parametrization"}, "geodesic");
    if (const Json* f = find_key(*g, "finsler")) c.geodesic.finsler = f->get<std::string>();
    if (const Json* t = find_key(*g, "tau")) c.geodesic.tau = as_real(*t, "geodesic.tau");
    if (const Json* p = find_key(*g, "parametrization"))
      c.geodesic.parametrization = p->get<std::string>();
    if (c.geodesic.parametrization != "canonical" && c.geodesic.parametrization != "tangent")
      throw ConfigError("geodesic.parametrization must be \"canonical\" or \"tangent\"");
  }
  if (const Json* v = find_key(j, "verify")) {
    check_keys(*v, {"checks", "taus", "ftau_starts"}, "verify");
    if (const Json* ch = find_key(*v, "checks")) c.verify.checks = ch->get<std::vector<std::string>>();
    if (const Json* t = find_key(*v, "taus")) {
      for (const auto& x : *t) c.verify.taus.push_back(as_real(x, "verify.taus"));
    }
    if (const Json* s = find_key(*v, "ftau_starts")) {
      for (const auto& st : *s) {
        check_keys(st, {"x", "y", "t_end"}, "verify.ftau_starts");
        FtauStart fs;
        fs.x = as_vec(st.at("x"), "ftau_starts.x");
        fs.y = as_vec(st.at("y"), "ftau_starts.y");
        if (const Json* t = find_key(st, "t_end")) fs.t_end = as_real(*t, "ftau_starts.t_end");
        if (fs.x.size() != 2 || fs.y.size() != 2)
          throw ConfigError("ftau_starts entries must be planar");
        c.verify.ftau_starts.push_back(fs);
      }
    }
  }
  if (const Json* r = find_key(j, "routh")) {
    check_keys(*r, {"cyclic", "mu"}, "routh");
    if (const Json* cy = find_key(*r, "cyclic")) {
      for (const auto& a : *cy) {
        if (!a.is_number_integer()) throw ConfigError("routh.cyclic entries must be integers");
        c.routh.cyclic.push_back(a.get<int>() - 1);  // config indices are 1-based like x1..xn
      }
    }
    if (const Json* mu = find_key(*r, "mu")) c.routh.mu = as_vec(*mu, "routh.mu");
  }
  if (const Json* s = find_key(j, "sampling")) {
    check_keys(*s, {"box", "count"}, "sampling");
    if (const Json* b = find_key(*s, "box")) {
      const Vec box = as_vec(*b, "sampling.box");
      if (box.size() != 2 || !(box[0] < box[1]))
        throw ConfigError("sampling.box must be [lo, hi] with lo < hi");
      c.sampling.lo = box[0];
      c.sampling.hi = box[1];
    }
    if (const Json* n = find_key(*s, "count")) c.sampling.count = n->get<int>();
    if (c.sampling.count < 1) throw ConfigError("sampling.count must be positive");
  }
  if (const Json* s = find_key(j, "seed")) c.seed = s->get<std::uint64_t>();
  if (const Json* p = find_key(j, "plot")) {
    check_keys(*p, {"inputs", "unit_disk"}, "plot");
    if (const Json* in = find_key(*p, "inputs")) c.plot_inputs = in->get<std::vector<std::string>>();
    if (const Json* d = find_key(*p, "unit_disk")) c.plot_disk = d->get<bool>();
  }
  return c;
}

inline RunConfig parse_config_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    int line, col;
    detail::parse_error_position(text, e.byte, line, col);
    throw ParseError("malformed JSON", line, col);
  }
  try {
    return parse_config(j);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config has a value of the wrong type: ") + e.what());
  }
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

namespace detail {

inline CoordMap build_metric(const Json& metric, int n) {
  if (metric.is_null() || (metric.is_string() && metric.get<std::string>() == "flat"))
    return euclidean_metric(n);
  if (metric.is_object()) {
    check_keys(metric, {"conformal"}, "lagrangian.metric");
    return conformal_metric(expression_map(n, {as_expr(metric.at("conformal"), "metric")}));
  }
  if (metric.is_array()) {
    if (static_cast<int>(metric.size()) != n) throw ConfigError("metric must have n rows");
    std::vector<std::string> entries;
    for (const auto& row : metric) {
      if (!row.is_array() || static_cast<int>(row.size()) != n)
        throw ConfigError("metric must be an n x n array");
      for (const auto& e : row) entries.push_back(as_expr(e, "metric entry"));
    }
    return expression_map(n, entries);
  }
  throw ConfigError("metric must be \"flat\", {\"conformal\": ...} or an n x n array");
}

inline PositionDomain build_domain(const std::string& text, int n) {
  if (text.empty()) return {};
  auto e = std::make_shared<const Expression>(Expression::parse(text, n));
  if (e->uses_velocity()) throw ConfigError("domain may only use x1..xn");
  return [e, n](const Vec& x) {
    try {
      return e->eval(std::span<const double>(x.data(), n)) > 0.0;
    } catch (const DomainError&) {
      return false;
    }
  };
}

}  // namespace detail

/// Builds the Lagrangian described by the config.
inline LagrangianModel build_lagrangian(const RunConfig& c) {
  using namespace detail;
  const ModelConfig& m = c.model;
  if (m.family == "poincare_magnetic") return poincare_magnetic();
  const int n = m.dim > 0 ? m.dim : static_cast<int>(c.x0.size());
  detail::check_dim(n);
  if (m.family == "simple" || m.family == "magnetic") {
    MagneticCoefficients coeffs;
    coeffs.metric = build_metric(m.metric, n);
    if (!m.beta.is_null()) {
      if (!m.beta.is_array() || static_cast<int>(m.beta.size()) != n)
        throw ConfigError("beta must be an array of n expressions");
      std::vector<std::string> b;
      for (const auto& e : m.beta) b.push_back(as_expr(e, "beta"));
      coeffs.one_form = expression_map(n, b);
    } else if (m.family == "magnetic") {
      throw ConfigError("magnetic family needs \"beta\"");
    }
    coeffs.potential = m.potential.is_null()
                           ? CoordMap::constant(n, {0.0})
                           : expression_map(n, {as_expr(m.potential, "potential")});
    LagrangianModel L = magnetic(std::move(coeffs), build_domain(m.domain, n));
    L.with_domain_text(m.domain);
    return L;
  }
  if (m.family == "expression") {
    if (m.expression.empty()) throw ConfigError("expression family needs \"expression\"");
    return parse_lagrangian(m.expression, n, m.domain);
  }
  if (m.family == "k_homogeneous") {
    if (!(m.k >= 2.0)) throw ConfigError("k_homogeneous family needs k >= 2");
    LagrangianModel base = m.expression.empty()
                               ? metric_power(build_metric(m.metric, n), m.k,
                                              build_domain(m.domain, n))
                               : parse_lagrangian(m.expression, n, m.domain);
    return k_homogeneous(std::move(base), m.k, c.seed);
  }
  throw ConfigError("unknown lagrangian family \"" + m.family + "\"");
}

/// The Finsler model selected by the geodesic section.
inline FinslerModel build_finsler(const RunConfig& c, const LagrangianModel& L) {
  const std::string& f = c.geodesic.finsler;
  if (f == "ftau") return ftau(c.geodesic.tau);
  if (f == "numeric") return jacobi_finsler(L, c.require_energy());
  if (f == "randers") return randers_closed_form(L, c.require_energy());
  if (f == "k_homogeneous") return k_homogeneous_closed_form(L, c.require_energy());
  throw ConfigError("unknown finsler model \"" + f + "\"");
}

/// Seeded sample of positions inside the model domain (uniform in the sampling box) paired with
/// standard normal velocities.
inline std::vector<std::pair<Vec, Vec>> sample_states(const LagrangianModel& L,
                                                      const SamplingConfig& s, int count,
                                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(s.lo, s.hi);
  std::normal_distribution<double> nv(0.0, 1.0);
  const int n = L.dim();
  std::vector<std::pair<Vec, Vec>> out;
  for (long tries = 0; static_cast<int>(out.size()) < count && tries < 1000L * count; ++tries) {
    Vec x(n), v(n);
    for (int i = 0; i < n; ++i) x[i] = ux(rng);
    for (int i = 0; i < n; ++i) v[i] = nv(rng);
    if (L.in_domain(x) && v.norm() > 1e-3) out.emplace_back(std::move(x), std::move(v));
  }
  if (out.empty()) throw ConfigError("sampling box does not meet the model domain");
  return out;
}

}  // namespace routhlab
