#pragma once

// Gauss-Hermite quadrature in the probabilists' convention (weight equal to
// the standard normal density), tensorized over axes. Model expectations are
// exact latent sums over atoms times quadrature over the Gaussian noise.
// Accumulation uses fixed-size chunks combined pairwise in chunk order, so
// results are bit-identical for any worker thread count.

#include <cstdint>
#include <functional>

#include "lowsnr/types.hpp"

namespace lowsnr {

struct QuadratureSpec {
  int nodes_per_axis = 0;             // 0: pick default_nodes_per_axis(d)
  std::int64_t budget = 10000000;     // cap on nodes_per_axis^d
  int threads = 1;

  int resolve_nodes(int d) const;
};

// 40 for d <= 2, 20 for d = 3, 12 for d >= 4.
int default_nodes_per_axis(int d);

// Nodes and weights integrating f against the standard normal on R exactly
// for polynomials of degree <= 2n-1; weights sum to 1.
void gauss_hermite(int n, Vector& nodes, Vector& weights);

// Flat tensor grid: row p of `nodes` is a point in R^d, weights sum to 1.
struct TensorGrid {
  Matrix nodes;
  Vector weights;
};
TensorGrid tensor_grid(int d, const QuadratureSpec& quad);

// Sum of eval_range(a, b, acc) contributions over [0, n), chunked with the
// fixed `chunk` size and combined pairwise in chunk order. eval_range must
// add items a..b-1 serially into acc (size dim, zero-initialized).
Vector accumulate_chunks(std::int64_t n, std::int64_t chunk, int dim,
                         const std::function<void(std::int64_t, std::int64_t, Vector&)>& eval_range,
                         int threads);

}  // namespace lowsnr
