#pragma once

// Compressed storage for symmetric tensors on R^d. An order-k symmetric
// tensor keeps one coordinate per multi-index alpha in N^d with |alpha| = k,
// i.e. per sorted index tuple; there are C(d+k-1, k) of them. The Frobenius
// inner product of two symmetric tensors is recovered through multiplicity
// weights mult(alpha) = k!/prod(alpha_i!).
//
// Enumeration order is fixed across the code base: multi-indices are listed
// with the leading exponent decreasing, e.g. d=2, k=2 gives
// (2,0), (1,1), (0,2). This equals ascending lexicographic order of the
// sorted index tuples (1,1), (1,2), (2,2).

#include <vector>

#include "lowsnr/types.hpp"

namespace lowsnr {

struct SymTensor {
  int k = 0;  // order
  int d = 0;  // ambient dimension
  Vector coords;
};

long long binomial(int n, int k);

// Number of distinct coordinates, C(d+k-1, k).
int sym_coord_count(int d, int k);

// All multi-indices of degree k on d variables, in the fixed order above.
// The reference stays valid for the lifetime of the program.
const std::vector<IndexVec>& multi_indices(int d, int k);

// mult(alpha) for every coordinate, same order as multi_indices.
const Vector& multiplicities(int d, int k);

// sqrt(mult(alpha)) per coordinate; scaling coords by this makes the
// Euclidean dot product equal the symmetric Frobenius inner product.
const Vector& sqrt_multiplicities(int d, int k);

SymTensor sym_zero(int d, int k);

// v^{tensor k}; coordinate at alpha is prod_i v_i^alpha_i.
SymTensor outer_power(const Vector& v, int k);

// Frobenius inner product sum_alpha mult(alpha) a_alpha b_alpha.
double sym_inner(const SymTensor& a, const SymTensor& b);

inline double sym_norm(const SymTensor& a) { return std::sqrt(sym_inner(a, a)); }

// Coordinates scaled by sqrt(mult); plain dot products of these equal
// sym_inner of the originals.
Vector orthonormal_coords(const SymTensor& t);

// Inverse of orthonormal_coords.
SymTensor from_orthonormal_coords(int d, int k, const Vector& coords);

}  // namespace lowsnr
