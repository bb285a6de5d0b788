#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "doctest.h"
#include "lowsnr/rng.hpp"
#include "lowsnr/slope.hpp"

using namespace lowsnr;

TEST_SUITE("slope") {

TEST_CASE("exact power laws come back exactly") {
  std::vector<std::pair<double, double>> pts;
  for (double x : {0.001, 0.004, 0.02, 0.1, 0.5})
    pts.emplace_back(x, 2.7 * std::pow(x, 3.0));
  const SlopeFit fit = fit_loglog_slope(pts);
  CHECK(fit.slope == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(fit.points_used == 5);

  std::vector<std::pair<double, double>> inv;
  for (double x : {10.0, 100.0, 1000.0}) inv.emplace_back(x, 5.0 / x);
  CHECK(fit_loglog_slope(inv).slope == doctest::Approx(-1.0).epsilon(1e-10));
}

TEST_CASE("noisy data keeps the slope within the scatter") {
  Rng rng(41);
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i < 12; ++i) {
    const double x = std::pow(10.0, -3.0 + 0.25 * i);
    pts.emplace_back(x, 0.8 * std::pow(x, 2.0) * std::exp(0.05 * rng.normal()));
  }
  const SlopeFit fit = fit_loglog_slope(pts);
  CHECK(std::abs(fit.slope - 2.0) < 0.1);
  CHECK(fit.r2 > 0.99);
}

TEST_CASE("values at the numerical floor are dropped before fitting") {
  std::vector<std::pair<double, double>> pts;
  for (double x : {1.0, 2.0, 4.0, 8.0}) pts.emplace_back(x, 3.0 * x);
  pts.emplace_back(0.5, 1e-15);   // below the 1e3 * eps floor
  pts.emplace_back(0.25, 1e-14);  // also below
  const SlopeFit fit = fit_loglog_slope(pts);
  CHECK(fit.points_used == 4);
  CHECK(fit.slope == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("degenerate inputs are rejected") {
  std::vector<std::pair<double, double>> two = {{1.0, 1.0}, {2.0, 2.0}};
  CHECK_THROWS_AS(fit_loglog_slope(two), std::invalid_argument);

  std::vector<std::pair<double, double>> negx = {{1.0, 1.0}, {-2.0, 2.0}, {3.0, 3.0}};
  CHECK_THROWS_AS(fit_loglog_slope(negx), std::invalid_argument);

  std::vector<std::pair<double, double>> negy = {{1.0, 1.0}, {2.0, -2.0}, {3.0, 3.0}};
  CHECK_THROWS_AS(fit_loglog_slope(negy), std::invalid_argument);

  // all y at the floor: nothing left to fit
  std::vector<std::pair<double, double>> flat = {{1.0, 1e-16}, {2.0, 1e-16}, {3.0, 1e-16}};
  CHECK_THROWS_AS(fit_loglog_slope(flat), std::invalid_argument);
}

TEST_CASE("r2 reflects departures from a pure power law") {
  std::vector<std::pair<double, double>> bent;
  for (double x : {0.01, 0.1, 1.0, 10.0, 100.0})
    bent.emplace_back(x, x + 100.0);  // flat then linear
  const SlopeFit fit = fit_loglog_slope(bent);
  CHECK(fit.r2 < 0.95);
  CHECK(fit.slope > 0.0);
  CHECK(fit.slope < 1.0);
}

}  // TEST_SUITE
