#pragma once

// Population information operators: the observed Fisher information of the
// marginal likelihood, the covariance of the Hermite feature vector, the
// weighted-moment information D_W M^T Sigma_L^{-1} D_W M, their restriction
// to the normal space, and the discrepancy between the two.

#include "lowsnr/moments.hpp"
#include "lowsnr/quadrature.hpp"
#include "lowsnr/types.hpp"

namespace lowsnr {

struct InfoReport {
  Matrix I_obs_W;
  Matrix I_gmom_W;
  double discrepancy_op_norm = 0.0;  // operator norm of R = I_obs_W - I_gmom_W
  double R_min_eig = 0.0;
  double snr = 0.0;
  int L = 0;
  double fisher_min_eig = 0.0;
  double cond_sigma = 0.0;  // condition number of Sigma_L
};

// E[s s^T] with s the score, by latent sum over atoms and Gauss-Hermite
// quadrature over the noise; symmetric PSD, m x m.
Matrix observed_fisher(const LatentModel& model, const Vector& theta_star,
                       const NoiseSpec& noise, const QuadratureSpec& quad);

// Cov(psi(Y)) = E[psi psi^T] - M M^T, N_L x N_L in orthonormal coordinates.
Matrix population_feature_covariance(const LatentModel& model, const Vector& theta_star,
                                     const NoiseSpec& noise, int L, const QuadratureSpec& quad);

// W^T M W for an orthonormal column basis W.
Matrix restrict_to_normal(const Matrix& mat, const Matrix& Wbasis);

// D_W M^T Sigma_L^{-1} D_W M through a symmetric eigen-factorization of
// Sigma_L; throws if Sigma_L has an eigenvalue <= 1e-12.
Matrix gmom_information(const LatentModel& model, const Vector& theta_star,
                        const NoiseSpec& noise, int L, const Filtration& filtration,
                        const QuadratureSpec& quad);

InfoReport info_discrepancy(const LatentModel& model, const Vector& theta_star,
                            const NoiseSpec& noise, int L, const Filtration& filtration,
                            const QuadratureSpec& quad);

// Exact bilinear form h^T I_obs_W g for layer directions together with the
// leading-order prediction SNR^k/k! <DT_k[h], DT_k[g]>_F (zero when the two
// directions live in different layers). Throws if h or g is not within 1e-8
// of one of the filtration layers.
std::pair<double, double> layer_bilinear(const LatentModel& model, const Vector& theta_star,
                                         const NoiseSpec& noise, const Vector& h, const Vector& g,
                                         const Filtration& filtration, const QuadratureSpec& quad);

}  // namespace lowsnr
