#pragma once
// Verification reports and their artifacts: report.json, tables/*.csv,
// plots/*.svg and meta.json.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unistd.h>
#include <vector>

namespace rigidity_lab {

namespace fs = std::filesystem;

// Artifact plumbing checks use this anchor.
inline constexpr const char* kPlumbing = "plumbing";

enum class Comparison { AtMost, AtLeast, InRange, Equal };

struct Check {
  std::string id;
  std::string anchor;
  Comparison cmp = Comparison::AtMost;
  double measured = 0;
  double tolerance = 0;  // upper bound, lower bound, or equality target
  double upper = 0;      // InRange only
  nlohmann::ordered_json details = nlohmann::ordered_json::object();
  double runtime = 0;  // seconds; written to meta.json only

  bool pass() const {
    if (!std::isfinite(measured)) return false;
    switch (cmp) {
      case Comparison::AtMost: return measured <= tolerance;
      case Comparison::AtLeast: return measured >= tolerance;
      case Comparison::InRange: return measured >= tolerance && measured <= upper;
      case Comparison::Equal: return measured == tolerance;
    }
    return false;
  }
};

inline const char* comparison_name(Comparison c) {
  switch (c) {
    case Comparison::AtMost: return "<=";
    case Comparison::AtLeast: return ">=";
    case Comparison::InRange: return "in";
    case Comparison::Equal: return "==";
  }
  return "?";
}

inline Check at_most(std::string id, std::string anchor, double measured, double tol) {
  Check c;
  c.id = std::move(id);
  c.anchor = std::move(anchor);
  c.cmp = Comparison::AtMost;
  c.measured = measured;
  c.tolerance = tol;
  return c;
}

inline Check at_least(std::string id, std::string anchor, double measured, double tol) {
  Check c = at_most(std::move(id), std::move(anchor), measured, tol);
  c.cmp = Comparison::AtLeast;
  return c;
}

inline Check in_range(std::string id, std::string anchor, double measured, double lo, double hi) {
  Check c = at_most(std::move(id), std::move(anchor), measured, lo);
  c.cmp = Comparison::InRange;
  c.upper = hi;
  return c;
}

inline Check holds(std::string id, std::string anchor, bool ok) {
  Check c = at_most(std::move(id), std::move(anchor), ok ? 1.0 : 0.0, 1.0);
  c.cmp = Comparison::Equal;
  return c;
}

struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

struct Series {
  std::string id;
  std::string anchor;
  std::string x_label, y_label;
  bool log_x = false, log_y = false;
  std::vector<double> x, y;
};

struct SuiteResult {
  std::string suite;
  std::uint64_t seed = 0;
  bool seeded = false;
  std::string digest;
  std::vector<Check> checks;
  std::vector<Table> tables;
  std::vector<Series> series;
  std::vector<std::string> warnings;

  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass(); });
  }
  const Check* find(const std::string& id) const {
    for (const auto& c : checks)
      if (c.id == id) return &c;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// formatting

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// JSON cannot carry non-finite numbers; they become strings.
inline nlohmann::ordered_json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline void sort_checks(SuiteResult& r) {
  std::stable_sort(r.checks.begin(), r.checks.end(), [](const Check& a, const Check& b) { return a.id < b.id; });
}

inline nlohmann::ordered_json check_json(const Check& c) {
  nlohmann::ordered_json j;
  j["id"] = c.id;
  j["anchor"] = c.anchor;
  j["comparison"] = comparison_name(c.cmp);
  j["measured"] = json_number(c.measured);
  if (c.cmp == Comparison::InRange) j["tolerance"] = {json_number(c.tolerance), json_number(c.upper)};
  else j["tolerance"] = json_number(c.tolerance);
  j["pass"] = c.pass();
  if (!c.details.empty()) j["details"] = c.details;
  return j;
}

inline nlohmann::ordered_json report_json(const SuiteResult& r) {
  nlohmann::ordered_json j;
  j["suite"] = r.suite;
  j["seed"] = r.seeded ? nlohmann::ordered_json(r.seed) : nlohmann::ordered_json(nullptr);
  j["inputs_digest"] = r.digest;
  j["pass"] = r.all_pass();
  std::size_t failed = 0;
  for (const auto& c : r.checks) failed += c.pass() ? 0 : 1;
  j["checks_total"] = r.checks.size();
  j["checks_failed"] = failed;
  j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : r.checks) j["checks"].push_back(check_json(c));
  j["series"] = nlohmann::ordered_json::array();
  for (const auto& s : r.series) {
    nlohmann::ordered_json sj;
    sj["id"] = s.id;
    sj["anchor"] = s.anchor;
    sj["x_label"] = s.x_label;
    sj["y_label"] = s.y_label;
    sj["x"] = nlohmann::ordered_json::array();
    sj["y"] = nlohmann::ordered_json::array();
    for (double v : s.x) sj["x"].push_back(json_number(v));
    for (double v : s.y) sj["y"].push_back(json_number(v));
    j["series"].push_back(sj);
  }
  return j;
}

inline std::string csv_text(const Table& t) {
  std::ostringstream os;
  for (std::size_t k = 0; k < t.header.size(); ++k) os << (k ? "," : "") << t.header[k];
  os << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << format_double(row[k]);
    os << "\n";
  }
  return os.str();
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string fixed(double v, int digits = 2) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Polyline plot; log axes drop non-positive points.
inline std::string svg_text(const Series& s) {
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < s.x.size() && k < s.y.size(); ++k) {
    double x = s.x[k], y = s.y[k];
    if (!std::isfinite(x) || !std::isfinite(y)) continue;
    if (s.log_x && !(x > 0)) continue;
    if (s.log_y && !(y > 0)) continue;
    xs.push_back(s.log_x ? std::log10(x) : x);
    ys.push_back(s.log_y ? std::log10(y) : y);
  }
  if (xs.empty()) return {};
  const double W = 640, H = 420, L = 80, R = 20, T = 40, B = 60;
  auto [xmin_it, xmax_it] = std::minmax_element(xs.begin(), xs.end());
  auto [ymin_it, ymax_it] = std::minmax_element(ys.begin(), ys.end());
  double x0 = *xmin_it, x1 = *xmax_it, y0 = *ymin_it, y1 = *ymax_it;
  if (x1 - x0 < 1e-300) { x0 -= 0.5; x1 += 0.5; }
  if (y1 - y0 < 1e-300) { y0 -= 0.5; y1 += 0.5; }
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << " " << H << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
     << xml_escape(s.id + " [" + s.anchor + "]") << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  auto tick = [&](double v, bool log) { return log ? "1e" + fixed(v, 2) : format_double(v).substr(0, 10); };
  for (int k = 0; k <= 4; ++k) {
    double vx = x0 + (x1 - x0) * k / 4, vy = y0 + (y1 - y0) * k / 4;
    os << "<text x=\"" << fixed(px(vx)) << "\" y=\"" << H - B + 18
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << xml_escape(tick(vx, s.log_x))
       << "</text>\n";
    os << "<text x=\"" << L - 6 << "\" y=\"" << fixed(py(vy) + 3)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << xml_escape(tick(vy, s.log_y))
       << "</text>\n";
  }
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
     << xml_escape(s.x_label + (s.log_x ? " (log)" : "")) << "</text>\n";
  os << "<text x=\"16\" y=\"" << H / 2 << "\" transform=\"rotate(-90 16 " << H / 2
     << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
     << xml_escape(s.y_label + (s.log_y ? " (log)" : "")) << "</text>\n";
  os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (std::size_t k = 0; k < xs.size(); ++k) os << (k ? " " : "") << fixed(px(xs[k])) << "," << fixed(py(ys[k]));
  os << "\"/>\n";
  for (std::size_t k = 0; k < xs.size(); ++k)
    os << "<circle cx=\"" << fixed(px(xs[k])) << "\" cy=\"" << fixed(py(ys[k])) << "\" r=\"3\" fill=\"steelblue\"/>\n";
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// atomic output

inline void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string());
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    os.flush();
    if (!os) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("rename failed for " + path.string() + ": " + ec.message());
  }
}

inline std::string safe_name(const std::string& id) {
  std::string out;
  for (char c : id) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  return out;
}

struct RunMeta {
  std::string version;
  std::string started_utc;
  double wall_seconds = 0;
  int jobs = 1;
  std::string config_path;
};

// Writes everything except meta.json byte-deterministically. Empty series are
// skipped and recorded as warnings.
inline void write_artifacts(SuiteResult& r, const fs::path& out) {
  sort_checks(r);
  fs::create_directories(out);
  for (const auto& t : r.tables) write_atomic(out / "tables" / (safe_name(t.name) + ".csv"), csv_text(t));
  for (const auto& s : r.series) {
    std::string svg = svg_text(s);
    if (svg.empty()) {
      r.warnings.push_back("series " + s.id + " has no plottable points; plot skipped");
      continue;
    }
    write_atomic(out / "plots" / (safe_name(s.id) + ".svg"), svg);
  }
  auto j = report_json(r);
  j["warnings"] = r.warnings;
  write_atomic(out / "report.json", j.dump(2) + "\n");
}

inline void write_meta(const SuiteResult& r, const RunMeta& m, const fs::path& out) {
  nlohmann::ordered_json j;
  j["suite"] = r.suite;
  j["version"] = m.version;
  j["seed"] = r.seeded ? nlohmann::ordered_json(r.seed) : nlohmann::ordered_json(nullptr);
  j["config"] = m.config_path;
  j["jobs"] = m.jobs;
  j["started_utc"] = m.started_utc;
  j["wall_seconds"] = m.wall_seconds;
  nlohmann::ordered_json rt = nlohmann::ordered_json::object();
  for (const auto& c : r.checks) rt[c.id] = c.runtime;
  j["check_runtime_seconds"] = rt;
  j["compiler"] = __VERSION__;
  write_atomic(out / "meta.json", j.dump(2) + "\n");
}

}  // namespace rigidity_lab
