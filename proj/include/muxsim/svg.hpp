#pragma once

// Plain SVG line charts. Output is a convenience view of the CSV files.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace muxsim {

struct ChartSeries {
  std::string label;
  std::vector<double> x, y;
  bool dashed = false;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  int width = 720;
  int height = 480;
};

namespace detail {

inline std::string fmt(double v, const char* f = "%.4g") {
  char buf[48];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '&': o += "&amp;"; break;
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                 "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"};
  return colors[i % (sizeof colors / sizeof colors[0])];
}

}  // namespace detail

inline std::string render_line_chart(const ChartSpec& spec, const std::vector<ChartSeries>& series) {
  const double left = 80, right = 190, top = 40, bottom = 60;
  const double pw = spec.width - left - right, ph = spec.height - top - bottom;

  auto ty = [&](double y) { return spec.log_y ? std::log10(y) : y; };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (spec.log_y && s.y[i] <= 0)) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + ph - (ty(y) - y0) / (y1 - y0) * ph; };

  std::string o;
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(spec.width) + "\" height=\"" +
       std::to_string(spec.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + detail::fmt(left + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
       detail::xml_escape(spec.title) + "</text>\n";
  o += "<rect x=\"" + detail::fmt(left) + "\" y=\"" + detail::fmt(top) + "\" width=\"" + detail::fmt(pw) +
       "\" height=\"" + detail::fmt(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";

  for (int k = 0; k <= 5; ++k) {
    const double xv = x0 + (x1 - x0) * k / 5.0;
    const double X = px(xv);
    o += "<line x1=\"" + detail::fmt(X) + "\" y1=\"" + detail::fmt(top + ph) + "\" x2=\"" + detail::fmt(X) +
         "\" y2=\"" + detail::fmt(top + ph + 5) + "\" stroke=\"black\"/>\n";
    o += "<text x=\"" + detail::fmt(X) + "\" y=\"" + detail::fmt(top + ph + 18) + "\" text-anchor=\"middle\">" +
         detail::fmt(xv) + "</text>\n";
    const double yt = y0 + (y1 - y0) * k / 5.0;
    const double Y = top + ph - (yt - y0) / (y1 - y0) * ph;
    o += "<line x1=\"" + detail::fmt(left - 5) + "\" y1=\"" + detail::fmt(Y) + "\" x2=\"" + detail::fmt(left) +
         "\" y2=\"" + detail::fmt(Y) + "\" stroke=\"black\"/>\n";
    o += "<text x=\"" + detail::fmt(left - 8) + "\" y=\"" + detail::fmt(Y + 4) + "\" text-anchor=\"end\">" +
         detail::fmt(spec.log_y ? std::pow(10.0, yt) : yt, "%.3g") + "</text>\n";
  }
  o += "<text x=\"" + detail::fmt(left + pw / 2) + "\" y=\"" + detail::fmt(spec.height - 15.0) +
       "\" text-anchor=\"middle\">" + detail::xml_escape(spec.x_label) + "</text>\n";
  o += "<text transform=\"translate(18," + detail::fmt(top + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
       detail::xml_escape(spec.y_label) + "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    std::string pts;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (spec.log_y && s.y[i] <= 0)) continue;
      pts += detail::fmt(px(s.x[i]), "%.2f") + "," + detail::fmt(py(s.y[i]), "%.2f") + " ";
    }
    o += "<polyline fill=\"none\" stroke=\"" + std::string(detail::palette(si)) + "\" stroke-width=\"1.5\"";
    if (s.dashed) o += " stroke-dasharray=\"6,4\"";
    o += " points=\"" + pts + "\"/>\n";
    const double ly = top + 12 + 16.0 * static_cast<double>(si);
    o += "<line x1=\"" + detail::fmt(left + pw + 10) + "\" y1=\"" + detail::fmt(ly - 4) + "\" x2=\"" +
         detail::fmt(left + pw + 34) + "\" y2=\"" + detail::fmt(ly - 4) + "\" stroke=\"" + detail::palette(si) +
         "\" stroke-width=\"1.5\"" + (s.dashed ? " stroke-dasharray=\"6,4\"" : "") + "/>\n";
    o += "<text x=\"" + detail::fmt(left + pw + 40) + "\" y=\"" + detail::fmt(ly) + "\">" +
         detail::xml_escape(s.label) + "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

inline void save_line_chart(const std::string& path, const ChartSpec& spec, const std::vector<ChartSeries>& series) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << render_line_chart(spec, series);
  if (!f.flush()) throw std::runtime_error("write failed: " + path);
}

}  // namespace muxsim
