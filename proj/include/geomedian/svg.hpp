#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace geomedian {
namespace svg {

namespace detail {

inline std::string escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string num(double v) {
  std::ostringstream os;
  os.precision(5);
  os << v;
  return os.str();
}

/// Picks a readable tick label for an axis value.
inline std::string tick_label(double v) {
  if (std::abs(v) < 1e-12) return "0";
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

/// Dark-blue to yellow ramp, t in [0, 1].
inline std::string ramp_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  struct Stop {
    double t;
    int r, g, b;
  };
  static const Stop stops[] = {{0.00, 13, 8, 135},
                               {0.25, 126, 3, 168},
                               {0.50, 204, 71, 120},
                               {0.75, 248, 149, 64},
                               {1.00, 240, 249, 33}};
  std::size_t hi = 1;
  while (hi + 1 < std::size(stops) && stops[hi].t < t) ++hi;
  const Stop& a = stops[hi - 1];
  const Stop& b = stops[hi];
  const double u = (t - a.t) / (b.t - a.t);
  std::ostringstream os;
  os << "rgb(" << static_cast<int>(std::lround(a.r + u * (b.r - a.r))) << ','
     << static_cast<int>(std::lround(a.g + u * (b.g - a.g))) << ','
     << static_cast<int>(std::lround(a.b + u * (b.b - a.b))) << ')';
  return os.str();
}

}  // namespace detail

struct Series {
  std::string label;
  std::string color = "#1f77b4";
  std::vector<double> values;  // x is the sample index
  bool dashed = false;         // for reference lines such as thresholds
};

struct PlotOptions {
  int width = 880;
  int height = 340;
  std::string title;
  std::string x_label;
  std::string y_label;
};

/// Renders index-vs-value line series as a standalone SVG document.
inline std::string line_plot(const std::vector<Series>& series, const PlotOptions& opt = {}) {
  if (series.empty()) throw std::invalid_argument("line_plot needs at least one series");
  std::size_t n = 0;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : series) {
    n = std::max(n, s.values.size());
    for (double v : s.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (n == 0) throw std::invalid_argument("line_plot series are empty");
  if (!(hi > lo)) {
    hi = lo + 1.0;
    lo -= 1.0;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;

  const double ml = 64, mr = 16, mt = opt.title.empty() ? 16 : 36, mb = 44;
  const double pw = opt.width - ml - mr, ph = opt.height - mt - mb;
  const auto sx = [&](double i) { return ml + (n == 1 ? pw / 2 : pw * i / (n - 1)); };
  const auto sy = [&](double v) { return mt + ph * (1.0 - (v - lo) / (hi - lo)); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\""
     << opt.height << "\" viewBox=\"0 0 " << opt.width << ' ' << opt.height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!opt.title.empty())
    os << "<text x=\"" << opt.width / 2 << "\" y=\"22\" text-anchor=\"middle\" "
       << "font-family=\"sans-serif\" font-size=\"15\">" << detail::escape(opt.title)
       << "</text>\n";

  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4.0;
    const double y = sy(v);
    os << "<line x1=\"" << detail::num(ml) << "\" y1=\"" << detail::num(y) << "\" x2=\""
       << detail::num(ml + pw) << "\" y2=\"" << detail::num(y)
       << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    os << "<text x=\"" << detail::num(ml - 6) << "\" y=\"" << detail::num(y + 4)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
       << detail::tick_label(v) << "</text>\n";
  }
  for (int k = 0; k <= 4; ++k) {
    const double i = (n - 1) * k / 4.0;
    const double x = sx(i);
    os << "<text x=\"" << detail::num(x) << "\" y=\"" << detail::num(mt + ph + 16)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
       << detail::tick_label(std::round(i)) << "</text>\n";
  }
  os << "<rect x=\"" << detail::num(ml) << "\" y=\"" << detail::num(mt) << "\" width=\""
     << detail::num(pw) << "\" height=\"" << detail::num(ph)
     << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";

  for (const auto& s : series) {
    if (s.values.empty()) continue;
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"";
    if (s.dashed) os << " stroke-dasharray=\"6,4\"";
    os << " points=\"";
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      if (i) os << ' ';
      os << detail::num(sx(static_cast<double>(i))) << ',' << detail::num(sy(s.values[i]));
    }
    os << "\"/>\n";
  }

  double ly = mt + 14;
  for (const auto& s : series) {
    if (s.label.empty()) continue;
    os << "<line x1=\"" << detail::num(ml + pw - 130) << "\" y1=\"" << detail::num(ly - 4)
       << "\" x2=\"" << detail::num(ml + pw - 106) << "\" y2=\"" << detail::num(ly - 4)
       << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"";
    if (s.dashed) os << " stroke-dasharray=\"6,4\"";
    os << "/>\n<text x=\"" << detail::num(ml + pw - 100) << "\" y=\"" << detail::num(ly)
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << detail::escape(s.label)
       << "</text>\n";
    ly += 16;
  }

  if (!opt.x_label.empty())
    os << "<text x=\"" << detail::num(ml + pw / 2) << "\" y=\"" << detail::num(mt + ph + 34)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
       << detail::escape(opt.x_label) << "</text>\n";
  if (!opt.y_label.empty())
    os << "<text x=\"14\" y=\"" << detail::num(mt + ph / 2)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
       << "transform=\"rotate(-90 14 " << detail::num(mt + ph / 2) << ")\">"
       << detail::escape(opt.y_label) << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

struct HeatmapOptions {
  int width = 880;
  int height = 340;
  std::string title;
  std::string x_label;
  std::string y_label;
};

/// Renders a dense matrix (rows[i][j], row 0 at the top) as an SVG heat map
/// with a plasma-style color ramp scaled to the data range.
inline std::string heatmap(const std::vector<std::vector<double>>& rows,
                           const HeatmapOptions& opt = {}) {
  if (rows.empty() || rows.front().empty())
    throw std::invalid_argument("heatmap needs a nonempty matrix");
  const std::size_t nc = rows.front().size();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& row : rows) {
    if (row.size() != nc) throw std::invalid_argument("heatmap rows must share a length");
    for (double v : row) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(hi > lo)) hi = lo + 1.0;

  const double ml = 56, mr = 16, mt = opt.title.empty() ? 16 : 36, mb = 40;
  const double pw = opt.width - ml - mr, ph = opt.height - mt - mb;
  const double cw = pw / static_cast<double>(nc);
  const double ch = ph / static_cast<double>(rows.size());

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << opt.width << "\" height=\""
     << opt.height << "\" viewBox=\"0 0 " << opt.width << ' ' << opt.height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!opt.title.empty())
    os << "<text x=\"" << opt.width / 2 << "\" y=\"22\" text-anchor=\"middle\" "
       << "font-family=\"sans-serif\" font-size=\"15\">" << detail::escape(opt.title)
       << "</text>\n";
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < nc; ++j) {
      const double t = (rows[i][j] - lo) / (hi - lo);
      // pad each cell by a hair so antialiasing seams do not show
      os << "<rect x=\"" << detail::num(ml + cw * j) << "\" y=\"" << detail::num(mt + ch * i)
         << "\" width=\"" << detail::num(cw + 0.5) << "\" height=\"" << detail::num(ch + 0.5)
         << "\" fill=\"" << detail::ramp_color(t) << "\"/>\n";
    }
  os << "<rect x=\"" << detail::num(ml) << "\" y=\"" << detail::num(mt) << "\" width=\""
     << detail::num(pw) << "\" height=\"" << detail::num(ph)
     << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";
  if (!opt.x_label.empty())
    os << "<text x=\"" << detail::num(ml + pw / 2) << "\" y=\"" << detail::num(mt + ph + 28)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
       << detail::escape(opt.x_label) << "</text>\n";
  if (!opt.y_label.empty())
    os << "<text x=\"14\" y=\"" << detail::num(mt + ph / 2)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
       << "transform=\"rotate(-90 14 " << detail::num(mt + ph / 2) << ")\">"
       << detail::escape(opt.y_label) << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace svg
}  // namespace geomedian
