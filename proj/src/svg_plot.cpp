#include "krrlab/svg_plot.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "krrlab/format.hpp"

namespace krrlab {

namespace {

constexpr double kPanelWidth = 420.0;
constexpr double kPanelHeight = 320.0;
constexpr double kMarginLeft = 64.0;
constexpr double kMarginRight = 16.0;
constexpr double kMarginTop = 32.0;
constexpr double kMarginBottom = 48.0;
constexpr double kLegendHeight = 20.0;

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string fixed(double v, int digits = 2) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, digits);
  return std::string(buf, res.ptr);
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  [[nodiscard]] bool valid() const { return lo <= hi; }
  void widen() {
    if (!valid()) {
      lo = 0.0;
      hi = 1.0;
    } else if (lo == hi) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

bool usable(double v, bool log_scale) { return std::isfinite(v) && (!log_scale || v > 0.0); }
double axis(double v, bool log_scale) { return log_scale ? std::log10(v) : v; }

std::string tick_label(double t, bool log_scale) {
  const double v = log_scale ? std::pow(10.0, t) : t;
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

}  // namespace

std::string render_svg(const std::vector<PlotPanel>& panels, const PlotOptions& options) {
  Range xr;
  Range yr;
  for (const auto& p : panels)
    for (const auto& s : p.series)
      for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
        if (!usable(s.x[i], options.log_x) || !usable(s.y[i], options.log_y)) continue;
        xr.add(axis(s.x[i], options.log_x));
        yr.add(axis(s.y[i], options.log_y));
      }
  xr.widen();
  yr.widen();

  const std::size_t count = std::max<std::size_t>(panels.size(), 1);
  const double width = kPanelWidth * static_cast<double>(count);
  const double height = kPanelHeight + kLegendHeight * 2.0;
  const double plot_w = kPanelWidth - kMarginLeft - kMarginRight;
  const double plot_h = kPanelHeight - kMarginTop - kMarginBottom;

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width) << "\" height=\"" << fixed(height)
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (std::size_t p = 0; p < panels.size(); ++p) {
    const double ox = kPanelWidth * static_cast<double>(p) + kMarginLeft;
    const double oy = kMarginTop;
    const auto sx = [&](double v) { return ox + (axis(v, options.log_x) - xr.lo) / (xr.hi - xr.lo) * plot_w; };
    const auto sy = [&](double v) { return oy + plot_h - (axis(v, options.log_y) - yr.lo) / (yr.hi - yr.lo) * plot_h; };

    svg << "<text x=\"" << fixed(ox + plot_w / 2) << "\" y=\"" << fixed(oy - 10)
        << "\" text-anchor=\"middle\" font-size=\"13\">" << escape(panels[p].title) << "</text>\n";
    svg << "<rect x=\"" << fixed(ox) << "\" y=\"" << fixed(oy) << "\" width=\"" << fixed(plot_w) << "\" height=\""
        << fixed(plot_h) << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int t = 0; t <= 4; ++t) {
      const double fx = xr.lo + (xr.hi - xr.lo) * t / 4.0;
      const double fy = yr.lo + (yr.hi - yr.lo) * t / 4.0;
      const double px = ox + plot_w * t / 4.0;
      const double py = oy + plot_h - plot_h * t / 4.0;
      svg << "<text x=\"" << fixed(px) << "\" y=\"" << fixed(oy + plot_h + 14) << "\" text-anchor=\"middle\">"
          << tick_label(fx, options.log_x) << "</text>\n";
      svg << "<text x=\"" << fixed(ox - 4) << "\" y=\"" << fixed(py + 4) << "\" text-anchor=\"end\">"
          << tick_label(fy, options.log_y) << "</text>\n";
      svg << "<line x1=\"" << fixed(ox) << "\" y1=\"" << fixed(py) << "\" x2=\"" << fixed(ox + plot_w) << "\" y2=\""
          << fixed(py) << "\" stroke=\"#ddd\"/>\n";
    }
    svg << "<text x=\"" << fixed(ox + plot_w / 2) << "\" y=\"" << fixed(oy + plot_h + 32)
        << "\" text-anchor=\"middle\">" << escape(options.x_label) << "</text>\n";
    svg << "<text transform=\"translate(" << fixed(ox - 48) << "," << fixed(oy + plot_h / 2)
        << ") rotate(-90)\" text-anchor=\"middle\">" << escape(options.y_label) << "</text>\n";

    const auto& series = panels[p].series;
    for (std::size_t s = 0; s < series.size(); ++s) {
      const char* color = kPalette[s % kPalette.size()];
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      bool first = true;
      for (std::size_t i = 0; i < std::min(series[s].x.size(), series[s].y.size()); ++i) {
        if (!usable(series[s].x[i], options.log_x) || !usable(series[s].y[i], options.log_y)) continue;
        svg << (first ? "" : " ") << fixed(sx(series[s].x[i])) << ',' << fixed(sy(series[s].y[i]));
        first = false;
      }
      svg << "\"/>\n";
      const double lx = kPanelWidth * static_cast<double>(p) + 8.0 + 100.0 * static_cast<double>(s % 4);
      const double ly = kPanelHeight + kLegendHeight * static_cast<double>(s / 4);
      svg << "<line x1=\"" << fixed(lx) << "\" y1=\"" << fixed(ly) << "\" x2=\"" << fixed(lx + 16) << "\" y2=\""
          << fixed(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
      svg << "<text x=\"" << fixed(lx + 20) << "\" y=\"" << fixed(ly + 4) << "\">" << escape(series[s].name)
          << "</text>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

std::vector<PlotPanel> quantile_panels(const QuantileTable& table) {
  std::vector<PlotPanel> panels;
  for (const auto& row : table) {
    auto panel = std::find_if(panels.begin(), panels.end(), [&](const PlotPanel& p) { return p.title == row.noise; });
    if (panel == panels.end()) {
      panels.push_back({row.noise, {}});
      panel = std::prev(panels.end());
    }
    const std::string name = "alpha=" + to_shortest(row.alpha);
    auto series = std::find_if(panel->series.begin(), panel->series.end(),
                               [&](const PlotSeries& s) { return s.name == name; });
    if (series == panel->series.end()) {
      panel->series.push_back({name, {}, {}});
      series = std::prev(panel->series.end());
    }
    series->x.push_back(row.level);
    series->y.push_back(row.quantile);
  }
  return panels;
}

void write_svg(const std::string& svg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string() + ": unable to open for writing");
  out << svg;
  if (!out) throw std::runtime_error("cannot write " + path.string() + ": write failed");
}

}  // namespace krrlab
