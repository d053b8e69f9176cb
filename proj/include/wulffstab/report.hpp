#pragma once

// Tabular output: CSV and gnuplot .dat files written atomically
// (temporary file, then rename), plus a small SVG line-plot writer.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace wulffstab {

// Shortest round-trip representation is not needed; %.17g is exact and stable.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

class Table {
 public:
  explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add(std::vector<std::string> row) {
    if (row.size() != columns_.size()) throw std::logic_error("table row has the wrong number of cells");
    rows_.push_back(std::move(row));
  }

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  std::string csv() const {
    std::string s = join(columns_, ",") + "\n";
    for (const auto& r : rows_) {
      std::vector<std::string> cells;
      for (const auto& c : r) cells.push_back(quote(c));
      s += join(cells, ",") + "\n";
    }
    return s;
  }

  // Whitespace-separated; non-numeric cells are quoted for gnuplot.
  std::string dat() const {
    std::string s = "# " + join(columns_, " ") + "\n";
    for (const auto& r : rows_) {
      std::vector<std::string> cells;
      for (const auto& c : r) cells.push_back(numeric(c) ? c : "\"" + c + "\"");
      s += join(cells, " ") + "\n";
    }
    return s;
  }

 private:
  static std::string join(const std::vector<std::string>& v, const char* sep) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + v[i];
    return s;
  }
  static std::string quote(const std::string& c) {
    if (c.find_first_of(",\"\n") == std::string::npos) return c;
    std::string q = "\"";
    for (char ch : c) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  }
  static bool numeric(const std::string& c) {
    if (c.empty()) return false;
    char* end = nullptr;
    std::strtod(c.c_str(), &end);
    return end && *end == '\0';
  }

  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    os << content;
    if (!os.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

// <stem>.csv and <stem>.dat in dir.
inline void write_table(const std::filesystem::path& dir, const std::string& stem, const Table& t) {
  write_atomic(dir / (stem + ".csv"), t.csv());
  write_atomic(dir / (stem + ".dat"), t.dat());
}

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool logx = false;
  bool logy = false;
  int width = 640;
  int height = 420;
};

inline std::string svg_plot(const std::vector<Series>& series, const PlotOptions& opt) {
  auto tx = [&](double v) { return opt.logx ? std::log10(v) : v; };
  auto ty = [&](double v) { return opt.logy ? std::log10(v) : v; };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      const double a = tx(s.x[i]), b = ty(s.y[i]);
      if (!std::isfinite(a) || !std::isfinite(b)) continue;
      x0 = std::min(x0, a);
      x1 = std::max(x1, a);
      y0 = std::min(y0, b);
      y1 = std::max(y1, b);
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const double ml = 70, mr = 150, mt = 40, mb = 50;
  const double pw = opt.width - ml - mr, ph = opt.height - mt - mb;
  auto px = [&](double a) { return ml + (a - x0) / (x1 - x0) * pw; };
  auto py = [&](double b) { return mt + (1.0 - (b - y0) / (y1 - y0)) * ph; };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};

  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" font-family=\"sans-serif\" "
                "font-size=\"12\">\n",
                opt.width, opt.height);
  os << buf << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf, "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" stroke=\"black\"/>\n",
                ml, mt, pw, ph);
  os << buf;
  for (int k = 0; k <= 4; ++k) {
    const double a = x0 + (x1 - x0) * k / 4.0, b = y0 + (y1 - y0) * k / 4.0;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%s%s</text>\n", px(a),
                  mt + ph + 16, opt.logx ? "1e" : "", fmt_short(a).c_str());
    os << buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%s%s</text>\n", ml - 6, py(b) + 4,
                  opt.logy ? "1e" : "", fmt_short(b).c_str());
    os << buf;
  }
  os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << opt.height - 10 << "\" text-anchor=\"middle\">" << opt.xlabel
     << "</text>\n";
  os << "<text x=\"14\" y=\"" << mt + ph / 2 << "\" transform=\"rotate(-90 14 " << mt + ph / 2
     << ")\" text-anchor=\"middle\">" << opt.ylabel << "</text>\n";
  os << "<text x=\"" << ml + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << opt.title
     << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* col = colors[s % 6];
    os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series[s].x.size() && i < series[s].y.size(); ++i) {
      const double a = tx(series[s].x[i]), b = ty(series[s].y[i]);
      if (!std::isfinite(a) || !std::isfinite(b)) continue;
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(a), py(b));
      os << buf;
    }
    os << "\"/>\n";
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" fill=\"%s\">%s</text>\n", ml + pw + 10,
                  mt + 16.0 * (s + 1), col, series[s].label.c_str());
    os << buf;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace wulffstab
