#pragma once

// Multivariate probabilists' Hermite tensors H_k(x) and the stacked feature
// map psi(y) = [H_1(y/sigma); ...; H_L(y/sigma)]. For identity covariance the
// tensor factorizes entrywise: the coordinate of H_k(x) at multi-index alpha
// is prod_i He_{alpha_i}(x_i). Feature vectors carry orthonormal symmetric
// coordinates (sqrt-multiplicity scaling), so the covariance of psi under
// pure noise is exactly diag(1! I, 2! I, ..., L! I).

#include <vector>

#include "lowsnr/symtensor.hpp"
#include "lowsnr/types.hpp"

namespace lowsnr {

// Univariate He_0..He_kmax at x, by the three-term recurrence.
void hermite_values(double x, int kmax, double* out);

SymTensor hermite_tensor(int k, const Vector& x);

// Stacked feature vector in orthonormal coordinates, blocks of order 1..L.
struct FeatureVector {
  int d = 0;
  int L = 0;
  Vector coords;  // length feature_dim(d, L)
};

// N_L = sum_{j=1..L} C(d+j-1, j).
int feature_dim(int d, int L);

// Offsets and per-order tables for fast repeated evaluation.
struct FeatureLayout {
  int d = 0;
  int L = 0;
  std::vector<int> offset;  // offset[j-1] = start of block j; offset[L] = N_L
  FeatureLayout() = default;
  FeatureLayout(int d_, int L_);
  int total() const { return offset.empty() ? 0 : offset.back(); }
};

FeatureVector feature_map(const Vector& y, double sigma, int L);

// In-place evaluation; `he` is scratch of size d x (L+1), `out` of size N_L.
void feature_map_into(const FeatureLayout& layout, const Vector& y, double sigma,
                      Matrix& he, Vector& out);

// Covariance of psi under y = sigma * xi: diag(1! I, ..., L! I).
Matrix gaussian_limit_covariance(int d, int L);

// Extract block j (order-j tensor) from a FeatureVector.
SymTensor feature_block(const FeatureVector& f, int j);

}  // namespace lowsnr
