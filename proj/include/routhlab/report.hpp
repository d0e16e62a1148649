#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace routhlab {

/// One checked quantity of a verification run.
struct Metric {
  std::string label;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string relation = "<=";  // "<=", ">=" or "flag"
  std::string note;
};

/// Structured outcome of a property or theorem check. overall() is the conjunction of all
/// metric pass flags; a report without metrics does not pass.
struct VerificationReport {
  std::string name;
  std::vector<Metric> metrics;
  std::vector<std::string> artifacts;

  bool overall() const {
    return !metrics.empty() &&
           std::all_of(metrics.begin(), metrics.end(), [](const Metric& m) { return m.pass; });
  }

  Metric& add_le(std::string label, double value, double tolerance, std::string note = {}) {
    metrics.push_back({std::move(label), value, tolerance, value <= tolerance, "<=",
                       std::move(note)});
    return metrics.back();
  }

  Metric& add_ge(std::string label, double value, double bound, std::string note = {}) {
    metrics.push_back({std::move(label), value, bound, value >= bound, ">=", std::move(note)});
    return metrics.back();
  }

  Metric& add_flag(std::string label, bool ok, std::string note = {}) {
    metrics.push_back({std::move(label), ok ? 1.0 : 0.0, 1.0, ok, "flag", std::move(note)});
    return metrics.back();
  }

  /// Records a failure that prevented a check from producing a number.
  Metric& add_error(std::string label, std::string message) {
    metrics.push_back({std::move(label), std::numeric_limits<double>::quiet_NaN(), 0.0, false,
                       "error", std::move(message)});
    return metrics.back();
  }

  void merge(const VerificationReport& other, const std::string& prefix = {}) {
    for (Metric m : other.metrics) {
      if (!prefix.empty()) m.label = prefix + "." + m.label;
      metrics.push_back(std::move(m));
    }
    artifacts.insert(artifacts.end(), other.artifacts.begin(), other.artifacts.end());
  }

  const Metric* find(const std::string& label) const {
    for (const auto& m : metrics)
      if (m.label == label) return &m;
    return nullptr;
  }
};

}  // namespace routhlab
