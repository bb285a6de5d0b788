#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace lowsnr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IndexVec = Eigen::VectorXi;

// Parameters live in R^m; nothing beyond a dense vector is needed.
using Parameter = Eigen::VectorXd;

// Signal strength beta and noise level sigma of y = beta*A(Z)*theta + sigma*xi.
struct NoiseSpec {
  double beta = 0.0;
  double sigma = 1.0;

  double snr() const { return beta * beta / (sigma * sigma); }
  double t() const { return beta / sigma; }
};

inline NoiseSpec noise_from_snr(double snr, double sigma = 1.0) {
  if (!(snr >= 0.0) || !(sigma > 0.0))
    throw std::invalid_argument("noise_from_snr: need snr >= 0 and sigma > 0");
  return NoiseSpec{sigma * std::sqrt(snr), sigma};
}

inline void check_noise(const NoiseSpec& noise) {
  if (!(noise.sigma > 0.0)) throw std::invalid_argument("NoiseSpec: sigma must be > 0");
  if (!(noise.beta >= 0.0)) throw std::invalid_argument("NoiseSpec: beta must be >= 0");
}

}  // namespace lowsnr
