#pragma once

// Least-squares slope on log-log axes, for scaling-law checks. Values below
// 1e3 times machine epsilon are treated as numerically indistinguishable
// from zero and dropped before fitting.

#include <utility>
#include <vector>

namespace lowsnr {

struct SlopeFit {
  double slope = 0.0;
  double r2 = 0.0;
  int points_used = 0;
};

SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points);

}  // namespace lowsnr
