// Copyright 2026 The otafl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "otafl/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "otafl/errors.hpp"

namespace otafl {
namespace {

constexpr double kWidth = 720.0;
constexpr double kChartHeight = 260.0;
constexpr double kMarginLeft = 64.0;
constexpr double kMarginRight = 16.0;
constexpr double kMarginTop = 34.0;
constexpr double kMarginBottom = 34.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
constexpr std::size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
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

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

Range finite_range(const std::vector<const std::vector<double>*>& columns) {
  double lo = 0.0, hi = 0.0;
  bool seen = false;
  for (const auto* col : columns) {
    for (double v : *col) {
      if (!std::isfinite(v)) continue;
      if (!seen) {
        lo = hi = v;
        seen = true;
      } else {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  if (!seen) return {0.0, 1.0};
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  return {lo, hi};
}

void render_chart(std::ostringstream& out, const Chart& chart, double y0) {
  const double plot_x = kMarginLeft;
  const double plot_y = y0 + kMarginTop;
  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kChartHeight - kMarginTop - kMarginBottom;

  std::vector<const std::vector<double>*> xcols, ycols;
  for (const auto& s : chart.series) {
    xcols.push_back(&s.xs);
    ycols.push_back(&s.ys);
  }
  const Range xr = finite_range(xcols);
  const Range yr = finite_range(ycols);
  const auto sx = [&](double x) {
    return plot_x + (x - xr.lo) / (xr.hi - xr.lo) * plot_w;
  };
  const auto sy = [&](double y) {
    return plot_y + plot_h - (y - yr.lo) / (yr.hi - yr.lo) * plot_h;
  };

  out << "<text x=\"" << num(plot_x) << "\" y=\"" << num(y0 + 20)
      << "\" font-size=\"14\" font-weight=\"bold\">" << escape(chart.title)
      << "</text>\n";
  // Axes and end labels.
  out << "<rect x=\"" << num(plot_x) << "\" y=\"" << num(plot_y)
      << "\" width=\"" << num(plot_w) << "\" height=\"" << num(plot_h)
      << "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
  out << "<text x=\"" << num(plot_x - 6) << "\" y=\"" << num(plot_y + plot_h)
      << "\" font-size=\"10\" text-anchor=\"end\">" << num(yr.lo)
      << "</text>\n";
  out << "<text x=\"" << num(plot_x - 6) << "\" y=\"" << num(plot_y + 10)
      << "\" font-size=\"10\" text-anchor=\"end\">" << num(yr.hi)
      << "</text>\n";
  out << "<text x=\"" << num(plot_x) << "\" y=\""
      << num(plot_y + plot_h + 16) << "\" font-size=\"10\">" << num(xr.lo)
      << "</text>\n";
  out << "<text x=\"" << num(plot_x + plot_w) << "\" y=\""
      << num(plot_y + plot_h + 16)
      << "\" font-size=\"10\" text-anchor=\"end\">" << num(xr.hi)
      << "</text>\n";
  out << "<text x=\"" << num(plot_x + plot_w / 2) << "\" y=\""
      << num(plot_y + plot_h + 28)
      << "\" font-size=\"11\" text-anchor=\"middle\">"
      << escape(chart.x_label) << "</text>\n";
  out << "<text x=\"14\" y=\"" << num(plot_y + plot_h / 2)
      << "\" font-size=\"11\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << num(plot_y + plot_h / 2) << ")\">" << escape(chart.y_label)
      << "</text>\n";

  for (std::size_t si = 0; si < chart.series.size(); ++si) {
    const Series& s = chart.series[si];
    const char* color = kPalette[si % kPaletteSize];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    bool any = false;
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (!std::isfinite(s.xs[i]) || !std::isfinite(s.ys[i])) continue;
      out << num(sx(s.xs[i])) << "," << num(sy(s.ys[i])) << " ";
      any = true;
    }
    out << "\"/>\n";
    if (!any) continue;
    // Legend entry.
    const double lx = plot_x + plot_w - 150;
    const double ly = plot_y + 14 + 14 * static_cast<double>(si);
    out << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly - 4)
        << "\" x2=\"" << num(lx + 18) << "\" y2=\"" << num(ly - 4)
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << num(lx + 24) << "\" y=\"" << num(ly)
        << "\" font-size=\"10\">" << escape(s.label) << "</text>\n";
  }
}

}  // namespace

std::string render_svg(std::span<const Chart> charts) {
  if (charts.empty()) throw InvalidInputError("no charts to render");
  for (const auto& c : charts) {
    if (c.series.empty())
      throw InvalidInputError("chart \"" + c.title + "\" has no series");
    for (const auto& s : c.series) {
      if (s.xs.size() != s.ys.size())
        throw InvalidInputError("series \"" + s.label +
                                "\" has mismatched xs/ys");
      if (s.xs.empty())
        throw InvalidInputError("series \"" + s.label + "\" is empty");
    }
  }
  const double height = kChartHeight * static_cast<double>(charts.size());
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth)
      << "\" height=\"" << num(height) << "\" viewBox=\"0 0 " << num(kWidth)
      << " " << num(height) << "\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << num(kWidth) << "\" height=\""
      << num(height) << "\" fill=\"#ffffff\"/>\n";
  for (std::size_t i = 0; i < charts.size(); ++i)
    render_chart(out, charts[i], kChartHeight * static_cast<double>(i));
  out << "</svg>\n";
  return out.str();
}

void emit_svg(std::span<const Chart> charts, const std::string& path) {
  const std::string doc = render_svg(charts);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write SVG file: " + path);
  out << doc;
  if (!out) throw ConfigError("failed writing SVG file: " + path);
}

}  // namespace otafl
