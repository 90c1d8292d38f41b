#pragma once

// Report plumbing: RFC-4180 CSV tables, SVG heatmaps with an overlay
// polyline, and the config hash stamped into every artifact.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "twa/error.hpp"
#include "twa/systemzoo.hpp"

namespace twa {

// FNV-1a 64 over the canonical (sorted-key) JSON dump.
inline std::string config_hash(const nlohmann::json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Shortest round-trip decimal for doubles.
inline std::string fmt_num(double x) {
  if (std::isnan(x)) return "nan";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) {
    if (row.size() != header.size()) throw Error(ErrorCode::ShapeMismatch, "CSV row width differs from header");
    rows.push_back(std::move(row));
  }
  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::Config, "no CSV column " + name);
    return static_cast<std::size_t>(it - header.begin());
  }
};

inline std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string to_csv(const CsvTable& t) {
  std::string out;
  auto line = [&](const std::vector<std::string>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + csv_quote(row[i]);
    out += "\r\n";
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  return out;
}

inline CsvTable parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> rec;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      rec.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      rec.push_back(std::move(field));
      field.clear();
      records.push_back(std::move(rec));
      rec.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw Error(ErrorCode::Io, "unterminated quoted CSV field");
  if (any || !field.empty()) {
    rec.push_back(std::move(field));
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw Error(ErrorCode::Io, "empty CSV");
  CsvTable t;
  t.header = records.front();
  for (std::size_t r = 1; r < records.size(); ++r) t.add(records[r]);
  return t;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::Io, "write failed: " + path);
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void emit_csv(const CsvTable& t, const std::string& path) { write_text(path, to_csv(t)); }

// ---- heatmaps ----------------------------------------------------------------

struct HeatmapAxes {
  std::string x_label, y_label;
  Interval x_range{0, 1}, y_range{0, 1};  // plotted extent, corners of the image
};

struct SvgLayout {
  double left = 70, top = 30, width = 420, height = 420, right = 30, bottom = 60;
};

// Diverging scale: blue at 0, white at 0.5, red at 1.
inline std::string diverging_color(double v) {
  v = std::clamp(v, 0.0, 1.0);
  int r, g, b;
  if (v <= 0.5) {
    const double t = v / 0.5;
    r = g = static_cast<int>(std::lround(255 * t));
    b = 255;
  } else {
    const double t = (1.0 - v) / 0.5;
    r = 255;
    g = b = static_cast<int>(std::lround(255 * t));
  }
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

// Parameter coordinates -> SVG user coordinates (y grows upward in parameter space).
inline Vec2 plot_point(const HeatmapAxes& ax, const SvgLayout& l, Vec2 p) {
  return {l.left + (p[0] - ax.x_range.lo) / ax.x_range.width() * l.width,
          l.top + (ax.y_range.hi - p[1]) / ax.y_range.width() * l.height};
}

// cells[i][j]: row i from the bottom of the plot, column j from the left.
inline std::string render_heatmap(const std::vector<std::vector<double>>& cells, const HeatmapAxes& ax,
                                  const std::vector<Polyline>& overlay, const std::string& title = "",
                                  const std::string& stamp = "", const SvgLayout& l = {}) {
  if (cells.empty() || cells[0].empty()) throw Error(ErrorCode::ShapeMismatch, "heatmap needs a non-empty matrix");
  const std::size_t ny = cells.size(), nx = cells[0].size();
  for (const auto& row : cells) {
    if (row.size() != nx) throw Error(ErrorCode::ShapeMismatch, "ragged heatmap matrix");
    for (double v : row) {
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "heatmap values must be finite");
    }
  }
  const double cw = l.width / static_cast<double>(nx), ch = l.height / static_cast<double>(ny);
  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt_num(l.left + l.width + l.right) << "\" height=\""
    << fmt_num(l.top + l.height + l.bottom) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  if (!stamp.empty()) s << "<desc>" << stamp << "</desc>\n";
  if (!title.empty()) s << "<text x=\"" << fmt_num(l.left) << "\" y=\"18\">" << title << "</text>\n";
  s << "<g shape-rendering=\"crispEdges\">\n";
  for (std::size_t i = 0; i < ny; ++i) {
    for (std::size_t j = 0; j < nx; ++j) {
      const double x = l.left + static_cast<double>(j) * cw;
      const double y = l.top + static_cast<double>(ny - 1 - i) * ch;
      s << "<rect x=\"" << fmt_num(x) << "\" y=\"" << fmt_num(y) << "\" width=\"" << fmt_num(cw) << "\" height=\""
        << fmt_num(ch) << "\" fill=\"" << diverging_color(cells[i][j]) << "\"/>\n";
    }
  }
  s << "</g>\n";
  s << "<rect x=\"" << fmt_num(l.left) << "\" y=\"" << fmt_num(l.top) << "\" width=\"" << fmt_num(l.width)
    << "\" height=\"" << fmt_num(l.height) << "\" fill=\"none\" stroke=\"black\"/>\n";
  s << "<clipPath id=\"plot\"><rect x=\"" << fmt_num(l.left) << "\" y=\"" << fmt_num(l.top) << "\" width=\""
    << fmt_num(l.width) << "\" height=\"" << fmt_num(l.height) << "\"/></clipPath>\n";
  s << "<g clip-path=\"url(#plot)\">\n";
  for (const auto& line : overlay) {
    if (line.empty()) continue;
    s << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < line.size(); ++k) {
      const Vec2 q = plot_point(ax, l, line[k]);
      s << (k ? " " : "") << fmt_num(q[0]) << "," << fmt_num(q[1]);
    }
    s << "\"/>\n";
  }
  s << "</g>\n";
  for (int t = 0; t <= 4; ++t) {
    const double fx = ax.x_range.lo + ax.x_range.width() * t / 4.0;
    const double px = l.left + l.width * t / 4.0;
    s << "<line x1=\"" << fmt_num(px) << "\" y1=\"" << fmt_num(l.top + l.height) << "\" x2=\"" << fmt_num(px)
      << "\" y2=\"" << fmt_num(l.top + l.height + 5) << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << fmt_num(px) << "\" y=\"" << fmt_num(l.top + l.height + 18) << "\" text-anchor=\"middle\">"
      << fmt_num(std::round(fx * 1000) / 1000) << "</text>\n";
    const double fy = ax.y_range.lo + ax.y_range.width() * t / 4.0;
    const double py = l.top + l.height - l.height * t / 4.0;
    s << "<line x1=\"" << fmt_num(l.left - 5) << "\" y1=\"" << fmt_num(py) << "\" x2=\"" << fmt_num(l.left)
      << "\" y2=\"" << fmt_num(py) << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << fmt_num(l.left - 8) << "\" y=\"" << fmt_num(py + 4) << "\" text-anchor=\"end\">"
      << fmt_num(std::round(fy * 1000) / 1000) << "</text>\n";
  }
  s << "<text x=\"" << fmt_num(l.left + l.width / 2) << "\" y=\"" << fmt_num(l.top + l.height + 40)
    << "\" text-anchor=\"middle\">" << ax.x_label << "</text>\n";
  s << "<text x=\"18\" y=\"" << fmt_num(l.top + l.height / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << fmt_num(l.top + l.height / 2) << ")\">" << ax.y_label << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

}  // namespace twa
