#include "lowsnr/moments.hpp"

#include <cmath>
#include <stdexcept>

namespace lowsnr {

SymTensor signal_moment(const LatentModel& model, const Vector& theta, int k) {
  if (k < 1) throw std::invalid_argument("signal_moment: k must be >= 1");
  if (theta.size() != model.m) throw std::invalid_argument("signal_moment: theta dimension");
  SymTensor t = sym_zero(model.d, k);
  for (std::size_t z = 0; z < model.atoms.size(); ++z) {
    const Vector v = model.atoms[z] * theta;
    t.coords += model.weights[z] * outer_power(v, k).coords;
  }
  return t;
}

Matrix signal_moment_jacobian(const LatentModel& model, const Vector& theta, int k) {
  if (k < 1) throw std::invalid_argument("signal_moment_jacobian: k must be >= 1");
  const auto& alphas = multi_indices(model.d, k);
  const int rows = static_cast<int>(alphas.size());
  Matrix jac = Matrix::Zero(rows, model.m);
  // d/dtheta of prod_i v_i^alpha_i with v = A theta is
  // sum_i alpha_i v^(alpha - e_i) * row_i(A); products are formed by explicit
  // loops so a zero v_i with alpha_i = 1 never produces 0 * inf.
  for (std::size_t z = 0; z < model.atoms.size(); ++z) {
    const Matrix& a = model.atoms[z];
    const Vector v = a * theta;
    for (int r = 0; r < rows; ++r) {
      const IndexVec& alpha = alphas[r];
      for (int i = 0; i < model.d; ++i) {
        if (alpha[i] == 0) continue;
        double p = 1.0;
        for (int j = 0; j < model.d; ++j) {
          const int e = j == i ? alpha[j] - 1 : alpha[j];
          for (int q = 0; q < e; ++q) p *= v[j];
        }
        jac.row(r).noalias() += (model.weights[z] * alpha[i] * p) * a.row(i);
      }
    }
  }
  return jac;
}

FeatureVector population_feature_mean(const LatentModel& model, const Vector& theta,
                                      const NoiseSpec& noise, int L) {
  check_noise(noise);
  FeatureLayout layout(model.d, L);
  FeatureVector f{model.d, L, Vector(layout.total())};
  const double t = noise.t();
  double tj = 1.0;
  for (int j = 1; j <= L; ++j) {
    tj *= t;
    f.coords.segment(layout.offset[j - 1], sym_coord_count(model.d, j)) =
        tj * orthonormal_coords(signal_moment(model, theta, j));
  }
  return f;
}

Matrix moment_map_jacobian(const LatentModel& model, const Vector& theta,
                           const NoiseSpec& noise, int L) {
  check_noise(noise);
  FeatureLayout layout(model.d, L);
  Matrix jac(layout.total(), model.m);
  const double t = noise.t();
  double tj = 1.0;
  for (int j = 1; j <= L; ++j) {
    tj *= t;
    const Vector& sm = sqrt_multiplicities(model.d, j);
    jac.middleRows(layout.offset[j - 1], sym_coord_count(model.d, j)) =
        tj * (sm.asDiagonal() * signal_moment_jacobian(model, theta, j));
  }
  return jac;
}

namespace {

// Orthonormal basis of the null space of `a` at relative threshold tol.
// Returns cols(a) x dim; also reports the boundary singular values.
Matrix null_space(const Matrix& a, double tol, double& sv_drop, double& sv_keep) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv[0] : 0.0;
  const double thr = tol * smax;
  int rank = 0;
  while (rank < sv.size() && sv[rank] > thr) ++rank;
  sv_keep = rank > 0 ? sv[rank - 1] : 0.0;
  sv_drop = rank < sv.size() ? sv[rank] : 0.0;
  return svd.matrixV().rightCols(a.cols() - rank);
}

}  // namespace

Filtration moment_filtration(const LatentModel& model, const Vector& theta_star, int Lmax,
                             double tol, const Matrix* Wbasis) {
  if (Lmax < 1) throw std::invalid_argument("moment_filtration: Lmax must be >= 1");
  Filtration f;
  f.tol = tol;
  f.Wbasis = Wbasis ? *Wbasis : Matrix::Identity(model.m, model.m);
  if ((f.Wbasis.transpose() * f.Wbasis - Matrix::Identity(f.Wbasis.cols(), f.Wbasis.cols()))
          .cwiseAbs()
          .maxCoeff() > 1e-10)
    throw std::invalid_argument("moment_filtration: Wbasis must be orthonormal");

  const int w = static_cast<int>(f.Wbasis.cols());
  Matrix stack(0, w);
  Matrix vk = Matrix::Identity(w, w);  // V_k in W coordinates; V_1 = W
  f.Vbases.push_back(f.Wbasis * vk);

  for (int k = 1; k <= Lmax; ++k) {
    const Matrix jk = sqrt_multiplicities(model.d, k).asDiagonal() *
                      signal_moment_jacobian(model, theta_star, k) * f.Wbasis;
    Matrix grown(stack.rows() + jk.rows(), w);
    grown << stack, jk;
    stack = std::move(grown);

    double sv_drop = 0.0, sv_keep = 0.0;
    const Matrix vnext = null_space(stack, tol, sv_drop, sv_keep);
    f.sv_drop.push_back(sv_drop);
    f.sv_keep.push_back(sv_keep);

    // U_k = V_k minus V_{k+1}; subspaces are nested, so projecting V_{k+1}
    // out of V_k leaves exactly dim V_k - dim V_{k+1} directions.
    const int udim = static_cast<int>(vk.cols() - vnext.cols());
    Matrix uk(w, udim);
    if (udim > 0) {
      const Matrix resid = vk - vnext * (vnext.transpose() * vk);
      Eigen::JacobiSVD<Matrix> svd(resid, Eigen::ComputeFullU);
      uk = svd.matrixU().leftCols(udim);
    }
    f.Ubases.push_back(f.Wbasis * uk);

    if (vnext.cols() == 0) {
      f.r_loc = k;
      f.reached = true;
      break;
    }
    vk = vnext;
    f.Vbases.push_back(f.Wbasis * vk);  // includes a surviving V_{Lmax+1}
  }
  return f;
}

Matrix restricted_moment_jacobian(const LatentModel& model, const Vector& theta_star,
                                  const NoiseSpec& noise, int L, const Filtration& filtration) {
  return moment_map_jacobian(model, theta_star, noise, L) * filtration.Wbasis;
}

}  // namespace lowsnr
