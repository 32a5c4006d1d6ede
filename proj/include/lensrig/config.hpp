#pragma once

// Flat structured-text run configuration: `key = value` lines grouped under
// optional `[section]` headers. Keys are stored as "section.key". Parse errors
// carry line and field diagnostics. CLI flags override file values via set().

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "metric.hpp"

namespace lensrig {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Config {
 public:
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get(const std::string& key, const std::string& fallback = "") const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("field '" + key + "': expected a number, got '" + it->second + "'");
    }
  }

  int get_int(const std::string& key, int fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
      size_t pos = 0;
      const int v = std::stoi(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("field '" + key + "': expected an integer, got '" + it->second + "'");
    }
  }

  // Section names (prefixes before the first dot) in sorted order.
  std::vector<std::string> sections_with(const std::string& prefix) const {
    std::vector<std::string> out;
    std::string last;
    for (const auto& [k, v] : values_) {
      const auto dot = k.find('.');
      if (dot == std::string::npos) continue;
      const std::string sec = k.substr(0, dot);
      if (sec.rfind(prefix, 0) == 0 && sec != last) {
        out.push_back(sec);
        last = sec;
      }
    }
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

namespace detail {
inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}
}  // namespace detail

inline Config parse_config(std::istream& in, const std::string& origin = "<stream>") {
  Config cfg;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated section header");
      section = detail::trim(t.substr(1, t.size() - 2));
      if (section.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) +
                        ": expected 'key = value', got '" + t + "'");
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string val = detail::trim(t.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    cfg.set(section.empty() ? key : section + "." + key, val);
  }
  return cfg;
}

inline Config parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, path);
}

// Build a metric from a config section: name + shape parameters, then the bump
// list ([bump], [bump2], ... with cx, cy, radius, amplitude, jet_order).
inline GaussianMetric metric_from_config(const Config& cfg, const std::string& section = "metric") {
  const std::string name = cfg.get(section + ".name");
  if (name.empty()) throw ConfigError("field '" + section + ".name': metric name required");
  GaussianMetric m;
  if (name == "flat_disk")
    m = flat_disk(cfg.get_double(section + ".radius", 2.0));
  else if (name == "sphere_cap")
    m = sphere_cap(cfg.get_double(section + ".r0", M_PI / 3.0));
  else if (name == "hyperbolic_collar")
    m = hyperbolic_collar(cfg.get_double(section + ".r0", 1.0));
  else if (name == "hyperbolic_waist")
    m = hyperbolic_waist(cfg.get_double(section + ".xc", 0.6),
                         cfg.get_double(section + ".half_width", 1.0));
  else if (name == "flat_polar_annulus")
    m = flat_polar_annulus(cfg.get_double(section + ".r_out", 2.0),
                           cfg.get_double(section + ".r_in", 1.0));
  else
    throw ConfigError("field '" + section + ".name': unknown metric '" + name + "'");
  for (const std::string& sec : cfg.sections_with(section == "metric" ? "bump" : section + "_bump")) {
    if (!cfg.has(sec + ".cx")) continue;
    m = bump_perturb(m, cfg.get_double(sec + ".cx", 0.0), cfg.get_double(sec + ".cy", 0.0),
                     cfg.get_double(sec + ".radius", 0.1), cfg.get_double(sec + ".amplitude", 0.01),
                     cfg.get_int(sec + ".jet_order", 3));
  }
  return m;
}

}  // namespace lensrig
