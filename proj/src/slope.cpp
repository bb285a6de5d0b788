#include "lowsnr/slope.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace lowsnr {

SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
  const double floor = 1e3 * std::numeric_limits<double>::epsilon();
  std::vector<std::pair<double, double>> logs;
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0)) throw std::invalid_argument("fit_loglog_slope: need x, y > 0");
    if (y < floor) continue;  // below the trustworthy range of a double-precision difference
    logs.emplace_back(std::log(x), std::log(y));
  }
  if (logs.size() < 3)
    throw std::invalid_argument("fit_loglog_slope: fewer than 3 usable points after filtering");

  double sx = 0.0, sy = 0.0;
  for (const auto& [lx, ly] : logs) {
    sx += lx;
    sy += ly;
  }
  const double mx = sx / logs.size(), my = sy / logs.size();
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [lx, ly] : logs) {
    sxx += (lx - mx) * (lx - mx);
    sxy += (lx - mx) * (ly - my);
    syy += (ly - my) * (ly - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_loglog_slope: degenerate abscissae");

  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.points_used = static_cast<int>(logs.size());
  const double ss_res = syy - fit.slope * sxy;
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return fit;
}

}  // namespace lowsnr
