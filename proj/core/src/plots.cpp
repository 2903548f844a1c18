// SPDX-License-Identifier: Apache-2.0
#include "mapp/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace mapp::plots {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
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

void draw_panel(std::ostringstream& os, const Axes& axes, const std::vector<Series>& series,
                double ox, double oy, double w, double h) {
  const double ml = 60, mr = 130, mt = 30, mb = 45;
  const double pw = w - ml - mr;
  const double ph = h - mt - mb;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + (y0 == 0 ? 1 : std::abs(y0) * 0.1);
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto sx = [&](double x) { return ox + ml + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return oy + mt + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  os << "<text x=\"" << fmt(ox + ml + pw / 2) << "\" y=\"" << fmt(oy + 18)
     << "\" text-anchor=\"middle\" font-size=\"14\">" << escape(axes.title) << "</text>\n";
  os << "<rect x=\"" << fmt(ox + ml) << "\" y=\"" << fmt(oy + mt) << "\" width=\"" << fmt(pw)
     << "\" height=\"" << fmt(ph) << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0;
    const double yv = y0 + (y1 - y0) * k / 4.0;
    os << "<text x=\"" << fmt(sx(xv)) << "\" y=\"" << fmt(oy + mt + ph + 16)
       << "\" text-anchor=\"middle\" font-size=\"10\">" << tick(xv) << "</text>\n";
    os << "<text x=\"" << fmt(ox + ml - 6) << "\" y=\"" << fmt(sy(yv) + 3)
       << "\" text-anchor=\"end\" font-size=\"10\">" << tick(yv) << "</text>\n";
    os << "<line x1=\"" << fmt(ox + ml) << "\" x2=\"" << fmt(ox + ml + pw) << "\" y1=\"" << fmt(sy(yv))
       << "\" y2=\"" << fmt(sy(yv)) << "\" stroke=\"#ddd\"/>\n";
  }
  os << "<text x=\"" << fmt(ox + ml + pw / 2) << "\" y=\"" << fmt(oy + h - 8)
     << "\" text-anchor=\"middle\" font-size=\"11\">" << escape(axes.x_label) << "</text>\n";
  os << "<text transform=\"translate(" << fmt(ox + 14) << ',' << fmt(oy + mt + ph / 2)
     << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"11\">" << escape(axes.y_label)
     << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) os << fmt(sx(s.x[i])) << ',' << fmt(sy(s.y[i])) << ' ';
    }
    os << "\"/>\n";
    const double ly = oy + mt + 12 + 16.0 * static_cast<double>(k);
    os << "<line x1=\"" << fmt(ox + ml + pw + 10) << "\" x2=\"" << fmt(ox + ml + pw + 28) << "\" y1=\""
       << fmt(ly) << "\" y2=\"" << fmt(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << fmt(ox + ml + pw + 32) << "\" y=\"" << fmt(ly + 4) << "\" font-size=\"10\">"
       << escape(s.name) << "</text>\n";
  }
}

std::string open_svg(double w, double h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(w) + "\" height=\"" + fmt(h) +
         "\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

}  // namespace

std::string line_chart(const Axes& axes, const std::vector<Series>& series, int width, int height) {
  std::ostringstream os;
  os << open_svg(width, height);
  draw_panel(os, axes, series, 0, 0, width, height);
  os << "</svg>\n";
  return os.str();
}

std::string panel_grid(const std::vector<std::pair<Axes, std::vector<Series>>>& panels, int columns,
                       int panel_width, int panel_height) {
  columns = std::max(1, columns);
  const int rows = static_cast<int>((panels.size() + static_cast<std::size_t>(columns) - 1) /
                                    static_cast<std::size_t>(columns));
  std::ostringstream os;
  os << open_svg(panel_width * columns, panel_height * std::max(rows, 1));
  for (std::size_t i = 0; i < panels.size(); ++i) {
    const int c = static_cast<int>(i) % columns;
    const int r = static_cast<int>(i) / columns;
    draw_panel(os, panels[i].first, panels[i].second, c * panel_width, r * panel_height, panel_width,
               panel_height);
  }
  os << "</svg>\n";
  return os.str();
}

std::string radar_chart(const std::string& title, const std::vector<std::string>& axes,
                        const std::vector<std::pair<std::string, std::vector<double>>>& rows,
                        int size) {
  const double cx = size / 2.0;
  const double cy = size / 2.0 + 10;
  const double radius = size * 0.32;
  const std::size_t k = axes.size();
  std::vector<double> scale(k, 0.0);
  for (const auto& [name, v] : rows) {
    for (std::size_t i = 0; i < k && i < v.size(); ++i) {
      if (std::isfinite(v[i])) scale[i] = std::max(scale[i], std::abs(v[i]));
    }
  }
  auto angle = [&](std::size_t i) {
    return -std::numbers::pi / 2 + 2 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(k);
  };
  std::ostringstream os;
  os << open_svg(size + 160, size);
  os << "<text x=\"" << fmt(cx) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
     << "</text>\n";
  for (std::size_t i = 0; i < k; ++i) {
    const double ax = cx + radius * std::cos(angle(i));
    const double ay = cy + radius * std::sin(angle(i));
    os << "<line x1=\"" << fmt(cx) << "\" y1=\"" << fmt(cy) << "\" x2=\"" << fmt(ax) << "\" y2=\"" << fmt(ay)
       << "\" stroke=\"#bbb\"/>\n";
    os << "<text x=\"" << fmt(cx + 1.12 * radius * std::cos(angle(i))) << "\" y=\""
       << fmt(cy + 1.12 * radius * std::sin(angle(i))) << "\" text-anchor=\"middle\" font-size=\"11\">"
       << escape(axes[i]) << "</text>\n";
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const char* color = kPalette[r % std::size(kPalette)];
    os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.12\" stroke=\"" << color << "\" points=\"";
    for (std::size_t i = 0; i < k; ++i) {
      const double v = i < rows[r].second.size() && scale[i] > 0 ? std::abs(rows[r].second[i]) / scale[i] : 0.0;
      os << fmt(cx + radius * v * std::cos(angle(i))) << ',' << fmt(cy + radius * v * std::sin(angle(i))) << ' ';
    }
    os << "\"/>\n";
    const double ly = 40.0 + 16.0 * static_cast<double>(r);
    os << "<rect x=\"" << fmt(size + 10.0) << "\" y=\"" << fmt(ly - 8) << "\" width=\"10\" height=\"10\" fill=\""
       << color << "\"/><text x=\"" << fmt(size + 26.0) << "\" y=\"" << fmt(ly + 1) << "\" font-size=\"11\">"
       << escape(rows[r].first) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

bool write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) return false;
    f << text;
    if (!f) {
      std::filesystem::remove(tmp, ec);
      return false;
    }
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    return false;
  }
  return true;
}

}  // namespace mapp::plots
