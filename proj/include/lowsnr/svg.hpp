#pragma once

// Minimal self-contained SVG writer for log-log line plots; no plotting
// dependency. Reference lines are drawn with a fixed slope through an anchor
// point, which is how the scaling-law guides appear in the reports.

#include <string>
#include <utility>
#include <vector>

namespace lowsnr {

struct SvgSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  // positive x and y
};

struct SvgRefLine {
  double slope = 1.0;
  double x_anchor = 1.0;
  double y_anchor = 1.0;
  std::string label;
};

void write_loglog_svg(const std::string& path, const std::string& title,
                      const std::string& xlabel, const std::string& ylabel,
                      const std::vector<SvgSeries>& series,
                      const std::vector<SvgRefLine>& reference_lines = {});

}  // namespace lowsnr
