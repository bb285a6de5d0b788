#include "lowsnr/symtensor.hpp"

#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace lowsnr {

long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  if (k > n - k) k = n - k;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

int sym_coord_count(int d, int k) {
  if (d < 1 || k < 0) throw std::invalid_argument("sym_coord_count: need d >= 1, k >= 0");
  return static_cast<int>(binomial(d + k - 1, k));
}

namespace {

void enumerate(int d, int k, int pos, IndexVec& cur, std::vector<IndexVec>& out) {
  if (pos == d - 1) {
    cur[pos] = k;
    out.push_back(cur);
    return;
  }
  for (int a = k; a >= 0; --a) {
    cur[pos] = a;
    enumerate(d, k - a, pos + 1, cur, out);
  }
}

struct IndexTables {
  std::vector<IndexVec> alphas;
  Vector mult;
  Vector sqrt_mult;
};

const IndexTables& tables(int d, int k) {
  static std::map<std::pair<int, int>, IndexTables> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find({d, k});
  if (it != cache.end()) return it->second;

  IndexTables t;
  IndexVec cur(d);
  enumerate(d, k, 0, cur, t.alphas);
  const int n = static_cast<int>(t.alphas.size());
  if (n != sym_coord_count(d, k)) throw std::logic_error("multi-index enumeration count mismatch");
  t.mult.resize(n);
  t.sqrt_mult.resize(n);
  double kfact = 1.0;
  for (int i = 2; i <= k; ++i) kfact *= i;
  for (int i = 0; i < n; ++i) {
    double denom = 1.0;
    for (int j = 0; j < d; ++j)
      for (int a = 2; a <= t.alphas[i][j]; ++a) denom *= a;
    t.mult[i] = kfact / denom;
    t.sqrt_mult[i] = std::sqrt(t.mult[i]);
  }
  return cache.emplace(std::make_pair(d, k), std::move(t)).first->second;
}

}  // namespace

const std::vector<IndexVec>& multi_indices(int d, int k) { return tables(d, k).alphas; }
const Vector& multiplicities(int d, int k) { return tables(d, k).mult; }
const Vector& sqrt_multiplicities(int d, int k) { return tables(d, k).sqrt_mult; }

SymTensor sym_zero(int d, int k) {
  return SymTensor{k, d, Vector::Zero(sym_coord_count(d, k))};
}

SymTensor outer_power(const Vector& v, int k) {
  const int d = static_cast<int>(v.size());
  const auto& alphas = multi_indices(d, k);
  SymTensor t{k, d, Vector(static_cast<int>(alphas.size()))};
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    double p = 1.0;
    for (int j = 0; j < d; ++j)
      for (int a = 0; a < alphas[i][j]; ++a) p *= v[j];
    t.coords[static_cast<int>(i)] = p;
  }
  return t;
}

double sym_inner(const SymTensor& a, const SymTensor& b) {
  if (a.k != b.k || a.d != b.d) throw std::invalid_argument("sym_inner: shape mismatch");
  const Vector& w = multiplicities(a.d, a.k);
  return (a.coords.array() * b.coords.array() * w.array()).sum();
}

Vector orthonormal_coords(const SymTensor& t) {
  return t.coords.array() * sqrt_multiplicities(t.d, t.k).array();
}

SymTensor from_orthonormal_coords(int d, int k, const Vector& coords) {
  if (coords.size() != sym_coord_count(d, k))
    throw std::invalid_argument("from_orthonormal_coords: size mismatch");
  SymTensor t{k, d, coords.array() / sqrt_multiplicities(d, k).array()};
  return t;
}

}  // namespace lowsnr
