#include "lowsnr/hermite.hpp"

#include <stdexcept>

namespace lowsnr {

void hermite_values(double x, int kmax, double* out) {
  out[0] = 1.0;
  if (kmax >= 1) out[1] = x;
  for (int n = 1; n < kmax; ++n) out[n + 1] = x * out[n] - n * out[n - 1];
}

SymTensor hermite_tensor(int k, const Vector& x) {
  if (k < 0 || k > 62) throw std::invalid_argument("hermite_tensor: order out of range");
  const int d = static_cast<int>(x.size());
  const auto& alphas = multi_indices(d, k);
  Matrix he(d, k + 1);
  for (int i = 0; i < d; ++i) {
    double vals[64];
    hermite_values(x[i], k, vals);
    for (int j = 0; j <= k; ++j) he(i, j) = vals[j];
  }
  SymTensor t{k, d, Vector(static_cast<int>(alphas.size()))};
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    double p = 1.0;
    for (int i = 0; i < d; ++i) p *= he(i, alphas[a][i]);
    t.coords[static_cast<int>(a)] = p;
  }
  return t;
}

int feature_dim(int d, int L) {
  int n = 0;
  for (int j = 1; j <= L; ++j) n += sym_coord_count(d, j);
  return n;
}

FeatureLayout::FeatureLayout(int d_, int L_) : d(d_), L(L_) {
  if (d < 1 || L < 1 || L > 62) throw std::invalid_argument("FeatureLayout: need d >= 1, 1 <= L <= 62");
  offset.resize(L + 1);
  offset[0] = 0;
  for (int j = 1; j <= L; ++j) offset[j] = offset[j - 1] + sym_coord_count(d, j);
}

void feature_map_into(const FeatureLayout& layout, const Vector& y, double sigma,
                      Matrix& he, Vector& out) {
  const int d = layout.d, L = layout.L;
  for (int i = 0; i < d; ++i) {
    double vals[64];
    hermite_values(y[i] / sigma, L, vals);
    for (int j = 0; j <= L; ++j) he(i, j) = vals[j];
  }
  for (int j = 1; j <= L; ++j) {
    const auto& alphas = multi_indices(d, j);
    const Vector& sm = sqrt_multiplicities(d, j);
    double* block = out.data() + layout.offset[j - 1];
    for (std::size_t a = 0; a < alphas.size(); ++a) {
      double p = 1.0;
      for (int i = 0; i < d; ++i) p *= he(i, alphas[a][i]);
      block[a] = p * sm[static_cast<int>(a)];
    }
  }
}

FeatureVector feature_map(const Vector& y, double sigma, int L) {
  if (!(sigma > 0.0)) throw std::invalid_argument("feature_map: sigma must be > 0");
  const int d = static_cast<int>(y.size());
  FeatureLayout layout(d, L);
  FeatureVector f{d, L, Vector(layout.total())};
  Matrix he(d, L + 1);
  feature_map_into(layout, y, sigma, he, f.coords);
  return f;
}

Matrix gaussian_limit_covariance(int d, int L) {
  const int n = feature_dim(d, L);
  Matrix cov = Matrix::Zero(n, n);
  int off = 0;
  double jfact = 1.0;
  for (int j = 1; j <= L; ++j) {
    jfact *= j;
    const int sz = sym_coord_count(d, j);
    cov.block(off, off, sz, sz).diagonal().setConstant(jfact);
    off += sz;
  }
  return cov;
}

SymTensor feature_block(const FeatureVector& f, int j) {
  if (j < 1 || j > f.L) throw std::invalid_argument("feature_block: order out of range");
  FeatureLayout layout(f.d, f.L);
  const int sz = sym_coord_count(f.d, j);
  return from_orthonormal_coords(f.d, j, f.coords.segment(layout.offset[j - 1], sz));
}

}  // namespace lowsnr
