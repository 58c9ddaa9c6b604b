// svg.hpp
// Minimal deterministic SVG rendering for the report CSVs: line charts,
// bar charts and heatmaps. Pure string-in, string-out; fixed-precision
// formatting so output bytes depend only on the input data.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace rlqas {

namespace svg_detail {

inline std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

struct Frame {
  double x0, y0, w, h;  // plot area in page coordinates
  double xmin, xmax, ymin, ymax;

  double px(double x) const {
    return xmax > xmin ? x0 + (x - xmin) / (xmax - xmin) * w : x0;
  }
  double py(double y) const {
    return ymax > ymin ? y0 + h - (y - ymin) / (ymax - ymin) * h : y0 + h;
  }
};

inline void axes(std::ostringstream& os, const Frame& f,
                 const std::string& title, const std::string& xlabel,
                 const std::string& ylabel) {
  os << "<rect x='" << num(f.x0) << "' y='" << num(f.y0) << "' width='"
     << num(f.w) << "' height='" << num(f.h)
     << "' fill='none' stroke='black'/>\n";
  os << "<text x='" << num(f.x0 + f.w / 2) << "' y='" << num(f.y0 - 8)
     << "' text-anchor='middle' font-size='13'>" << title << "</text>\n";
  os << "<text x='" << num(f.x0 + f.w / 2) << "' y='" << num(f.y0 + f.h + 28)
     << "' text-anchor='middle' font-size='11'>" << xlabel << "</text>\n";
  os << "<text x='" << num(f.x0 - 34) << "' y='" << num(f.y0 + f.h / 2)
     << "' text-anchor='middle' font-size='11' transform='rotate(-90 "
     << num(f.x0 - 34) << " " << num(f.y0 + f.h / 2) << ")'>" << ylabel
     << "</text>\n";
  if (f.xmax > f.xmin) {
    os << "<text x='" << num(f.x0) << "' y='" << num(f.y0 + f.h + 14)
       << "' font-size='10'>" << num(f.xmin) << "</text>\n";
    os << "<text x='" << num(f.x0 + f.w) << "' y='" << num(f.y0 + f.h + 14)
       << "' text-anchor='end' font-size='10'>" << num(f.xmax) << "</text>\n";
    os << "<text x='" << num(f.x0 - 4) << "' y='" << num(f.y0 + f.h)
       << "' text-anchor='end' font-size='10'>" << num(f.ymin) << "</text>\n";
    os << "<text x='" << num(f.x0 - 4) << "' y='" << num(f.y0 + 10)
       << "' text-anchor='end' font-size='10'>" << num(f.ymax) << "</text>\n";
  }
}

inline void polyline(std::ostringstream& os, const Frame& f,
                     const std::vector<double>& xs,
                     const std::vector<double>& ys, const std::string& color) {
  if (xs.empty()) return;
  os << "<polyline fill='none' stroke='" << color << "' points='";
  for (std::size_t i = 0; i < xs.size(); ++i)
    os << num(f.px(xs[i])) << "," << num(f.py(ys[i])) << " ";
  os << "'/>\n";
}

inline Frame fit(double x0, double y0, double w, double h,
                 const std::vector<double>& xs,
                 const std::vector<double>& ys) {
  Frame f{x0, y0, w, h, 0, 0, 0, 0};
  if (!xs.empty()) {
    f.xmin = *std::min_element(xs.begin(), xs.end());
    f.xmax = *std::max_element(xs.begin(), xs.end());
    f.ymin = *std::min_element(ys.begin(), ys.end());
    f.ymax = *std::max_element(ys.begin(), ys.end());
    if (f.ymax == f.ymin) {
      f.ymin -= 0.5;
      f.ymax += 0.5;
    }
  }
  return f;
}

}  // namespace svg_detail

struct Series {
  std::string title;
  std::string ylabel;
  std::vector<double> xs;
  std::vector<double> ys;
};

// Panels laid out in a row (the training view uses four: accuracy, reward,
// gates, depth). Empty series render labeled empty axes.
inline std::string svg_line_panels(const std::vector<Series>& panels,
                                   const std::string& xlabel = "step") {
  const double pw = 260, ph = 200, margin = 60, gap = 30;
  const double width = margin + panels.size() * (pw + gap);
  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='"
     << svg_detail::num(width) << "' height='290'>\n";
  for (std::size_t i = 0; i < panels.size(); ++i) {
    const Series& s = panels[i];
    svg_detail::Frame f =
        svg_detail::fit(margin + i * (pw + gap), 30, pw, ph, s.xs, s.ys);
    svg_detail::axes(os, f, s.title, xlabel, s.ylabel);
    svg_detail::polyline(os, f, s.xs, s.ys, "#1f77b4");
  }
  os << "</svg>\n";
  return os.str();
}

inline std::string svg_bar_chart(const std::string& title,
                                 const std::vector<std::string>& labels,
                                 const std::vector<double>& values) {
  const double bw = 40, gap = 14, h = 200, x0 = 60, y0 = 40;
  const double width = x0 + labels.size() * (bw + gap) + 20;
  double vmax = 1.0;
  for (double v : values) vmax = std::max(vmax, v);
  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='"
     << svg_detail::num(width) << "' height='300'>\n";
  os << "<text x='" << svg_detail::num(width / 2)
     << "' y='20' text-anchor='middle' font-size='13'>" << title
     << "</text>\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double bh = values[i] / vmax * h;
    const double x = x0 + i * (bw + gap);
    os << "<rect x='" << svg_detail::num(x) << "' y='"
       << svg_detail::num(y0 + h - bh) << "' width='" << svg_detail::num(bw)
       << "' height='" << svg_detail::num(bh) << "' fill='#1f77b4'/>\n";
    os << "<text x='" << svg_detail::num(x + bw / 2) << "' y='"
       << svg_detail::num(y0 + h + 16) << "' text-anchor='middle' "
       << "font-size='10'>" << labels[i] << "</text>\n";
    os << "<text x='" << svg_detail::num(x + bw / 2) << "' y='"
       << svg_detail::num(y0 + h - bh - 4) << "' text-anchor='middle' "
       << "font-size='10'>" << svg_detail::num(values[i]) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline std::string svg_heatmap(const std::string& title,
                               const std::vector<std::string>& row_labels,
                               const std::vector<std::string>& col_labels,
                               const std::vector<std::vector<double>>& cells) {
  const double cs = 46, x0 = 80, y0 = 50;
  const double width = x0 + col_labels.size() * cs + 20;
  const double height = y0 + row_labels.size() * cs + 30;
  double vmax = 1e-12;
  for (const auto& row : cells)
    for (double v : row) vmax = std::max(vmax, v);
  std::ostringstream os;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='"
     << svg_detail::num(width) << "' height='" << svg_detail::num(height)
     << "'>\n";
  os << "<text x='" << svg_detail::num(width / 2)
     << "' y='20' text-anchor='middle' font-size='13'>" << title
     << "</text>\n";
  for (std::size_t j = 0; j < col_labels.size(); ++j)
    os << "<text x='" << svg_detail::num(x0 + j * cs + cs / 2) << "' y='"
       << svg_detail::num(y0 - 6) << "' text-anchor='middle' font-size='10'>"
       << col_labels[j] << "</text>\n";
  for (std::size_t i = 0; i < row_labels.size(); ++i) {
    os << "<text x='" << svg_detail::num(x0 - 6) << "' y='"
       << svg_detail::num(y0 + i * cs + cs / 2 + 4)
       << "' text-anchor='end' font-size='10'>" << row_labels[i]
       << "</text>\n";
    for (std::size_t j = 0; j < cells[i].size(); ++j) {
      const int shade =
          255 - static_cast<int>(std::lround(cells[i][j] / vmax * 200.0));
      os << "<rect x='" << svg_detail::num(x0 + j * cs) << "' y='"
         << svg_detail::num(y0 + i * cs) << "' width='" << svg_detail::num(cs)
         << "' height='" << svg_detail::num(cs) << "' fill='rgb(" << shade
         << "," << shade << ",255)' stroke='white'/>\n";
      os << "<text x='" << svg_detail::num(x0 + j * cs + cs / 2) << "' y='"
         << svg_detail::num(y0 + i * cs + cs / 2 + 4)
         << "' text-anchor='middle' font-size='9'>"
         << svg_detail::num(cells[i][j]) << "</text>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace rlqas
