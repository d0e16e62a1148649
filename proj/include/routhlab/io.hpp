#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "routhlab/errors.hpp"
#include "routhlab/ode.hpp"
#include "routhlab/report.hpp"

namespace routhlab {

/// Shortest decimal form that reads back to the same double ("%.17g").
inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------------------------
// Trajectory CSV: header `t,x1..xn,v1..vn,<log label>`, one row per sample.

inline void write_csv(std::ostream& os, const Trajectory& t) {
  const int n = t.dim();
  os << "t";
  for (int i = 1; i <= n; ++i) os << ",x" << i;
  for (int i = 1; i <= n; ++i) os << ",v" << i;
  os << "," << t.log_label << "\n";
  for (std::size_t k = 0; k < t.size(); ++k) {
    os << format_real(t.times[k]);
    for (int i = 0; i < n; ++i) os << "," << format_real(t.x[k][i]);
    for (int i = 0; i < n; ++i) os << "," << format_real(t.v[k][i]);
    os << "," << format_real(k < t.energy_log.size() ? t.energy_log[k] : 0.0) << "\n";
  }
}

inline std::string to_csv(const Trajectory& t) {
  std::ostringstream os;
  write_csv(os, t);
  return os.str();
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_real(const std::string& s, int line, int column) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw ParseError("bad number '" + s + "'", line, column);
  return v;
}

}  // namespace detail

inline Trajectory read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("empty CSV input", 1, 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_csv_line(line);
  const int cols = static_cast<int>(header.size());
  if (cols < 4 || cols % 2 != 0 || header[0] != "t")
    throw ParseError("CSV header must be t,x1..xn,v1..vn,<quantity>", 1, 1);
  const int n = (cols - 2) / 2;
  for (int i = 0; i < n; ++i) {
    if (header[1 + i] != "x" + std::to_string(i + 1) ||
        header[1 + n + i] != "v" + std::to_string(i + 1))
      throw ParseError("unexpected CSV column '" + header[1 + i] + "'", 1, 2 + i);
  }
  Trajectory t;
  t.log_label = header.back();
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (static_cast<int>(cells.size()) != cols)
      throw ParseError("expected " + std::to_string(cols) + " columns", lineno, 1);
    Vec x(n), v(n);
    const double time = detail::parse_real(cells[0], lineno, 1);
    for (int i = 0; i < n; ++i) {
      x[i] = detail::parse_real(cells[1 + i], lineno, 2 + i);
      v[i] = detail::parse_real(cells[1 + n + i], lineno, 2 + n + i);
    }
    t.push(time, std::move(x), std::move(v), detail::parse_real(cells.back(), lineno, cols));
  }
  return t;
}

inline Trajectory read_csv_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open " + path.string());
  return read_csv(is);
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << text;
}

// ---------------------------------------------------------------------------------------------
// Report JSON.

inline nlohmann::ordered_json to_json(const VerificationReport& r) {
  nlohmann::ordered_json j;
  j["name"] = r.name;
  j["overall"] = r.overall();
  auto metrics = nlohmann::ordered_json::array();
  for (const auto& m : r.metrics) {
    nlohmann::ordered_json mj;
    mj["label"] = m.label;
    if (std::isfinite(m.value)) {
      mj["value"] = m.value;
    } else {
      mj["value"] = nullptr;
    }
    mj["relation"] = m.relation;
    mj["tolerance"] = m.tolerance;
    mj["pass"] = m.pass;
    if (!m.note.empty()) mj["note"] = m.note;
    metrics.push_back(std::move(mj));
  }
  j["metrics"] = std::move(metrics);
  j["artifacts"] = r.artifacts;
  return j;
}

// ---------------------------------------------------------------------------------------------
// SVG plots.

struct PlotCurve {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

struct PlotOptions {
  bool unit_disk = false;
  std::string title;
};

/// Deterministic 800x800 SVG with one polyline per curve and a legend.
inline std::string render_svg(const std::vector<PlotCurve>& curves, const PlotOptions& opt = {}) {
  constexpr double kSize = 800.0, kMargin = 40.0;
  static const char* const palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                        "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  auto extend = [&](double x, double y) {
    xmin = std::min(xmin, x), xmax = std::max(xmax, x);
    ymin = std::min(ymin, y), ymax = std::max(ymax, y);
  };
  if (opt.unit_disk) extend(-1.0, -1.0), extend(1.0, 1.0);
  for (const auto& c : curves)
    for (const auto& [x, y] : c.points)
      if (std::isfinite(x) && std::isfinite(y)) extend(x, y);
  if (xmin > xmax) xmin = -1, xmax = 1, ymin = -1, ymax = 1;
  const double span = std::max({xmax - xmin, ymax - ymin, 1e-12}) * 1.05;
  const double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);
  const double scale = (kSize - 2 * kMargin) / span;
  auto px = [&](double x) { return kSize / 2 + (x - cx) * scale; };
  auto py = [&](double y) { return kSize / 2 - (y - cy) * scale; };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return std::string(buf);
  };
  auto escape = [](const std::string& s) {
    std::string o;
    for (char ch : s) {
      if (ch == '&') o += "&amp;";
      else if (ch == '<') o += "&lt;";
      else if (ch == '>') o += "&gt;";
      else o += ch;
    }
    return o;
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\" "
        "viewBox=\"0 0 800 800\">\n";
  os << "<rect width=\"800\" height=\"800\" fill=\"white\"/>\n";
  if (!opt.title.empty())
    os << "<text x=\"400\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"16\">"
       << escape(opt.title) << "</text>\n";
  if (opt.unit_disk)
    os << "<circle cx=\"" << num(px(0)) << "\" cy=\"" << num(py(0)) << "\" r=\"" << num(scale)
       << "\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const char* color = palette[i % 8];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (const auto& [x, y] : curves[i].points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      os << (first ? "" : " ") << num(px(x)) << "," << num(py(y));
      first = false;
    }
    os << "\"/>\n";
    const double ly = 50.0 + 20.0 * static_cast<double>(i);
    os << "<line x1=\"600\" y1=\"" << num(ly - 4) << "\" x2=\"625\" y2=\"" << num(ly - 4)
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"632\" y=\"" << num(ly) << "\" font-family=\"sans-serif\" font-size=\"12\">"
       << escape(curves[i].label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline PlotCurve plot_curve(const Trajectory& t, std::string label) {
  if (t.dim() < 2) throw PreconditionError("plots need at least two coordinates");
  PlotCurve c{std::move(label), {}};
  for (const Vec& x : t.x) c.points.emplace_back(x[0], x[1]);
  return c;
}

}  // namespace routhlab
