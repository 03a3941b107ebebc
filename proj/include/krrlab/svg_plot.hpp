#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "krrlab/harness.hpp"

namespace krrlab {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotPanel {
  std::string title;
  std::vector<PlotSeries> series;
};

struct PlotOptions {
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
};

/// Renders side-by-side line-chart panels sharing the y range. The output is a
/// pure function of its inputs.
std::string render_svg(const std::vector<PlotPanel>& panels, const PlotOptions& options);

/// One panel per noise label with one polyline per alpha (x = level, y = quantile).
std::vector<PlotPanel> quantile_panels(const QuantileTable& table);

void write_svg(const std::string& svg, const std::filesystem::path& path);

}  // namespace krrlab
