#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace modmine {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  bool log_y = false;
};

// Standalone SVG document with axes, ticks, one polyline per series and a legend.
std::string render_svg(const PlotSpec& spec);
void write_svg(const PlotSpec& spec, const std::filesystem::path& path);

}  // namespace modmine
