#pragma once

// Signal population moments T_k(theta) = E_{Z~mu}[(A(Z)theta)^{tensor k}],
// their Jacobians, the stacked normalized moment map M(theta;beta) with block
// j equal to (beta/sigma)^j T_j(theta), and the moment filtration
// V_k = (intersection of ker DT_j, j < k) within the normal space W with
// informative layers U_k = V_k and V_{k+1}-orthocomplement.

#include <limits>
#include <vector>

#include "lowsnr/hermite.hpp"
#include "lowsnr/models.hpp"
#include "lowsnr/symtensor.hpp"
#include "lowsnr/types.hpp"

namespace lowsnr {

SymTensor signal_moment(const LatentModel& model, const Vector& theta, int k);

// Matrix of DT_k(theta): rows follow the symmetric coordinate enumeration
// (raw, not multiplicity-scaled), columns the standard basis of R^m.
Matrix signal_moment_jacobian(const LatentModel& model, const Vector& theta, int k);

FeatureVector population_feature_mean(const LatentModel& model, const Vector& theta,
                                      const NoiseSpec& noise, int L);

// Jacobian of population_feature_mean in theta: N_L x m, rows in orthonormal
// coordinates so that column norms are Frobenius norms of the block tensors.
Matrix moment_map_jacobian(const LatentModel& model, const Vector& theta,
                           const NoiseSpec& noise, int L);

constexpr int kFiltrationUnreached = std::numeric_limits<int>::max();

struct Filtration {
  Matrix Wbasis;                // m x w, orthonormal columns
  std::vector<Matrix> Vbases;   // ambient orthonormal bases, V_1 down to the cutoff
  std::vector<Matrix> Ubases;   // ambient orthonormal bases of the layers U_k
  int r_loc = kFiltrationUnreached;  // smallest k with V_{k+1} = {0}
  bool reached = false;              // false: cutoff hit before V collapsed
  double tol = 0.0;                  // singular-value threshold used
  std::vector<double> sv_drop;       // per step: largest singular value treated as zero
  std::vector<double> sv_keep;       // per step: smallest singular value kept
};

// Null spaces are taken by SVD at threshold tol * sigma_max of the stacked,
// multiplicity-scaled Jacobian restricted to W. W defaults to all of R^m,
// which is the normal space for finite equivalence classes.
Filtration moment_filtration(const LatentModel& model, const Vector& theta_star, int Lmax,
                             double tol = 1e-9, const Matrix* Wbasis = nullptr);

// Stacked Jacobian of the moment map restricted to W: N_L x dim W, column for
// basis vector w carrying ((beta/sigma)^j DT_j(theta)[w])_{j<=L} in
// orthonormal coordinates.
Matrix restricted_moment_jacobian(const LatentModel& model, const Vector& theta_star,
                                  const NoiseSpec& noise, int L, const Filtration& filtration);

}  // namespace lowsnr
