#pragma once

// Mean-scaling Gaussian latent-variable models y = beta * A(Z) * theta +
// sigma * xi with a finite latent atom list and an explicit finite group of
// parameter-space isometries generating the observational equivalence class.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lowsnr/rng.hpp"
#include "lowsnr/types.hpp"

namespace lowsnr {

struct LatentModel {
  int d = 0;                    // observation dimension
  int m = 0;                    // parameter dimension
  std::vector<double> weights;  // mu(z), sum to 1
  std::vector<Matrix> atoms;    // A(z), each d x m
  std::vector<Matrix> group;    // isometries on R^m; element 0 is the identity
  std::string name;
};

// Built-in families. "gmm" needs K; the others ignore it.
//   gmm(K, d)        K-component mixture, m = K*d, A(z) selects block z,
//                    group = S_K acting by block permutation
//   cyclic_mra(d)    circular shifts, group Z_d
//   sign_flip(d)     diagonal sign patterns, group {+-1}^d
//   permutation(d)   coordinate permutations, group S_d
//   dihedral_mra(d)  shifts plus reflected shifts, group D_{2d}; enumeration
//                    is shifts l=0..d-1 then reflection-composed shifts
struct ModelSpec {
  std::string model;
  int d = 0;
  int K = 0;
};

LatentModel build_model(const ModelSpec& spec);

// Structural checks for hand-built models: weights sum to 1, the averaged
// Gram matrix sum_z mu(z) A(z)^T A(z) is positive definite, the group starts
// with the identity and (for groups of size <= 100) is closed under
// composition. build_model runs this on everything it returns.
void validate_model(const LatentModel& model);

struct Dataset {
  Matrix samples;  // n x d, one observation per row
  std::uint64_t seed = 0;
  // provenance
  std::string model_name;
  Vector theta;
  double beta = 0.0;
  double sigma = 1.0;
};

Dataset sample(const LatentModel& model, const Vector& theta, const NoiseSpec& noise,
               std::int64_t n, std::uint64_t seed);

// Per-theta cache of the atom means A(z) theta, for hot loops.
struct AtomMeans {
  std::vector<Vector> mean;
};
AtomMeans atom_means(const LatentModel& model, const Vector& theta);

// log sum_z mu(z) phi_sigma(y - beta A(z) theta), evaluated in log space.
double marginal_log_density(const LatentModel& model, const Vector& theta,
                            const NoiseSpec& noise, const Vector& y);
double marginal_log_density(const LatentModel& model, const AtomMeans& means,
                            const NoiseSpec& noise, const Vector& y);

// Gradient of marginal_log_density in theta: posterior-weighted sum of
// (beta/sigma^2) A(z)^T (y - beta A(z) theta).
Vector score(const LatentModel& model, const Vector& theta, const NoiseSpec& noise,
             const Vector& y);
Vector score(const LatentModel& model, const AtomMeans& means, const NoiseSpec& noise,
             const Vector& y);

// Both quantities from one posterior evaluation; score_out is accumulated
// into (callers zero it), which suits averaging loops.
double log_density_and_score(const LatentModel& model, const AtomMeans& means,
                             const NoiseSpec& noise, const Vector& y,
                             Eigen::Ref<Vector> score_out);

// Quotient metric min_{g in G} ||theta0 - g theta1||.
double equivalence_distance(const LatentModel& model, const Vector& theta0,
                            const Vector& theta1, std::size_t group_cap = 1000000);

// g* theta_hat with g* the first group element minimizing the distance to
// theta_ref (ties break on the model's fixed enumeration order).
Vector align(const LatentModel& model, const Vector& theta_hat, const Vector& theta_ref,
             std::size_t group_cap = 1000000);

// Observations mapped through Sigma^{-1/2}, atoms likewise.
std::pair<Dataset, LatentModel> whiten(const Dataset& data, const Matrix& Sigma,
                                       const LatentModel& model);

}  // namespace lowsnr
