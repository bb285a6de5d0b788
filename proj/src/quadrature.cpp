#include "lowsnr/quadrature.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>
#include <vector>

namespace lowsnr {

int default_nodes_per_axis(int d) {
  if (d <= 2) return 40;
  if (d == 3) return 20;
  return 12;
}

int QuadratureSpec::resolve_nodes(int d) const {
  const int n = nodes_per_axis > 0 ? nodes_per_axis : default_nodes_per_axis(d);
  if (n < 5) throw std::invalid_argument("QuadratureSpec: nodes_per_axis must be >= 5");
  double total = 1.0;
  for (int i = 0; i < d; ++i) total *= n;
  if (total > static_cast<double>(budget))
    throw std::runtime_error("QuadratureSpec: node budget exceeded; reduce nodes or dimension");
  return n;
}

void gauss_hermite(int n, Vector& nodes, Vector& weights) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: n must be >= 1");
  // Golub-Welsch on the He recurrence x He_j = He_{j+1} + j He_{j-1}:
  // symmetric tridiagonal with zero diagonal and off-diagonal sqrt(j).
  Matrix jac = Matrix::Zero(n, n);
  for (int j = 1; j < n; ++j) {
    const double b = std::sqrt(static_cast<double>(j));
    jac(j, j - 1) = b;
    jac(j - 1, j) = b;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(jac);
  nodes = es.eigenvalues();
  weights.resize(n);
  for (int j = 0; j < n; ++j) {
    const double v = es.eigenvectors()(0, j);
    weights[j] = v * v;  // total mass of the standard normal is 1
  }
  // The rule is symmetric about 0; enforce that exactly so odd integrands
  // cancel as well as floating point allows.
  for (int j = 0; j < n / 2; ++j) {
    const int r = n - 1 - j;
    const double x = 0.5 * (nodes[r] - nodes[j]);
    nodes[j] = -x;
    nodes[r] = x;
    const double w = 0.5 * (weights[j] + weights[r]);
    weights[j] = w;
    weights[r] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

TensorGrid tensor_grid(int d, const QuadratureSpec& quad) {
  const int n = quad.resolve_nodes(d);
  Vector nodes1, weights1;
  gauss_hermite(n, nodes1, weights1);

  std::int64_t total = 1;
  for (int i = 0; i < d; ++i) total *= n;
  TensorGrid grid;
  grid.nodes.resize(total, d);
  grid.weights.resize(total);
  std::vector<int> idx(d, 0);
  for (std::int64_t p = 0; p < total; ++p) {
    double w = 1.0;
    for (int i = 0; i < d; ++i) {
      grid.nodes(p, i) = nodes1[idx[i]];
      w *= weights1[idx[i]];
    }
    grid.weights[p] = w;
    for (int i = d - 1; i >= 0; --i) {
      if (++idx[i] < n) break;
      idx[i] = 0;
    }
  }
  return grid;
}

Vector accumulate_chunks(std::int64_t n, std::int64_t chunk, int dim,
                         const std::function<void(std::int64_t, std::int64_t, Vector&)>& eval_range,
                         int threads) {
  if (n <= 0) return Vector::Zero(dim);
  if (chunk < 1) throw std::invalid_argument("accumulate_chunks: chunk must be >= 1");
  const std::int64_t nchunks = (n + chunk - 1) / chunk;
  std::vector<Vector> partial(nchunks);

  auto run_chunk = [&](std::int64_t c) {
    const std::int64_t a = c * chunk;
    const std::int64_t b = std::min(n, a + chunk);
    partial[c] = Vector::Zero(dim);
    eval_range(a, b, partial[c]);
  };

  if (threads <= 1 || nchunks == 1) {
    for (std::int64_t c = 0; c < nchunks; ++c) run_chunk(c);
  } else {
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    const int nt = static_cast<int>(std::min<std::int64_t>(threads, nchunks));
    pool.reserve(nt);
    for (int t = 0; t < nt; ++t)
      pool.emplace_back([&] {
        for (std::int64_t c = next.fetch_add(1); c < nchunks; c = next.fetch_add(1)) run_chunk(c);
      });
    for (auto& th : pool) th.join();
  }

  // Pairwise fold in chunk order; independent of how chunks were scheduled.
  std::int64_t len = nchunks;
  while (len > 1) {
    const std::int64_t half = (len + 1) / 2;
    for (std::int64_t i = 0; i + half < len; ++i) partial[i] += partial[i + half];
    len = half;
  }
  return partial[0];
}

}  // namespace lowsnr
