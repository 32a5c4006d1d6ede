#pragma once

// Machine-readable verification reports and deterministic exporters (JSON,
// CSV, SVG). All floating-point output is printed with 17 significant digits
// so byte-identical reports follow from identical inputs and seed.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace lensrig {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct ReportCheck {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct VerificationReport {
  static constexpr int kSchemaVersion = 1;
  std::string command;
  std::vector<ReportCheck> checks;
  std::map<std::string, std::string> provenance;  // grid, steps, seed, ...

  bool overall_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
  void add(const std::string& name, double residual, double tolerance) {
    checks.push_back({name, residual, tolerance, residual < tolerance});
  }
};

namespace detail {
inline std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}
}  // namespace detail

// Fixed-layout serializer: key order and float formatting are deterministic.
inline std::string report_to_json(const VerificationReport& r) {
  std::string s;
  s += "{\n";
  s += "  \"schema_version\": " + std::to_string(VerificationReport::kSchemaVersion) + ",\n";
  s += "  \"command\": \"" + detail::json_escape(r.command) + "\",\n";
  s += "  \"overall_pass\": " + std::string(r.overall_pass() ? "true" : "false") + ",\n";
  s += "  \"checks\": [\n";
  for (size_t i = 0; i < r.checks.size(); ++i) {
    const auto& c = r.checks[i];
    s += "    {\"name\": \"" + detail::json_escape(c.name) + "\", \"residual\": " +
         fmt17(c.residual) + ", \"tolerance\": " + fmt17(c.tolerance) + ", \"pass\": " +
         (c.pass ? "true" : "false") + "}";
    s += (i + 1 < r.checks.size()) ? ",\n" : "\n";
  }
  s += "  ],\n";
  s += "  \"provenance\": {\n";
  size_t i = 0;
  for (const auto& [k, v] : r.provenance) {
    s += "    \"" + detail::json_escape(k) + "\": \"" + detail::json_escape(v) + "\"";
    s += (++i < r.provenance.size()) ? ",\n" : "\n";
  }
  s += "  }\n}\n";
  return s;
}

// ---------------------------------------------------------------------------
// File writers
// ---------------------------------------------------------------------------

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
}

// CSV: header row then data rows; numeric cells pre-formatted by the caller.
inline std::string csv_table(const std::vector<std::string>& header,
                             const std::vector<std::vector<std::string>>& rows) {
  std::string s;
  for (size_t i = 0; i < header.size(); ++i)
    s += header[i] + (i + 1 < header.size() ? "," : "\n");
  for (const auto& row : rows)
    for (size_t i = 0; i < row.size(); ++i) s += row[i] + (i + 1 < row.size() ? "," : "\n");
  return s;
}

// ---------------------------------------------------------------------------
// Minimal deterministic SVG builders
// ---------------------------------------------------------------------------

class SvgCanvas {
 public:
  SvgCanvas(double w, double h) : w_(w), h_(h) {}

  void line(double x1, double y1, double x2, double y2, const std::string& stroke = "#000",
            double width = 1.0) {
    body_ += "  <line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) +
             "\" y2=\"" + num(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
             num(width) + "\"/>\n";
  }
  void circle(double cx, double cy, double r, const std::string& stroke = "#000",
              const std::string& fill = "none") {
    body_ += "  <circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) +
             "\" stroke=\"" + stroke + "\" fill=\"" + fill + "\"/>\n";
  }
  void rect(double x, double y, double w, double h, const std::string& fill) {
    body_ += "  <rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) +
             "\" height=\"" + num(h) + "\" fill=\"" + fill + "\"/>\n";
  }
  void polygon(const std::vector<std::pair<double, double>>& pts,
               const std::string& stroke = "#000") {
    body_ += "  <polygon points=\"";
    for (size_t i = 0; i < pts.size(); ++i) {
      body_ += num(pts[i].first) + "," + num(pts[i].second);
      if (i + 1 < pts.size()) body_ += " ";
    }
    body_ += "\" stroke=\"" + stroke + "\" fill=\"none\"/>\n";
  }

  std::string str() const {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w_) + "\" height=\"" +
           num(h_) + "\" viewBox=\"0 0 " + num(w_) + " " + num(h_) + "\">\n" + body_ + "</svg>\n";
  }

 private:
  static std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
  }
  double w_, h_;
  std::string body_;
};

// Grayscale fill for a residual on a log scale between lo and hi.
inline std::string heat_color(double value, double lo, double hi) {
  double t = 0.0;
  if (value > lo) t = std::min(1.0, std::log(value / lo) / std::log(hi / lo));
  const int level = static_cast<int>(255.0 * (1.0 - t));
  char buf[10];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", level, level, 255 - level / 4);
  return buf;
}

}  // namespace lensrig
