#include "lowsnr/information.hpp"

#include <cmath>
#include <stdexcept>

namespace lowsnr {

namespace {

constexpr std::int64_t kChunk = 512;

// Expectation over (atom, noise-node) pairs of a flattened integrand.
Vector model_expectation(const LatentModel& model, const TensorGrid& grid, int dim, int threads,
                         const std::function<void(std::size_t, std::int64_t, double, Vector&)>& add) {
  const std::int64_t nodes = grid.weights.size();
  const std::int64_t total = static_cast<std::int64_t>(model.atoms.size()) * nodes;
  return accumulate_chunks(
      total, kChunk, dim,
      [&](std::int64_t a, std::int64_t b, Vector& acc) {
        for (std::int64_t i = a; i < b; ++i) {
          const std::size_t z = static_cast<std::size_t>(i / nodes);
          const std::int64_t p = i % nodes;
          add(z, p, model.weights[z] * grid.weights[p], acc);
        }
      },
      threads);
}

}  // namespace

Matrix observed_fisher(const LatentModel& model, const Vector& theta_star,
                       const NoiseSpec& noise, const QuadratureSpec& quad) {
  check_noise(noise);
  const TensorGrid grid = tensor_grid(model.d, quad);
  const AtomMeans means = atom_means(model, theta_star);
  const int m = model.m;

  const Vector flat = model_expectation(
      model, grid, m * m, quad.threads,
      [&](std::size_t z, std::int64_t p, double w, Vector& acc) {
        const Vector y = noise.beta * means.mean[z] + noise.sigma * grid.nodes.row(p).transpose();
        const Vector s = score(model, means, noise, y);
        Eigen::Map<Matrix>(acc.data(), m, m).noalias() += w * (s * s.transpose());
      });

  Matrix fisher = Eigen::Map<const Matrix>(flat.data(), m, m);
  return 0.5 * (fisher + fisher.transpose());
}

Matrix population_feature_covariance(const LatentModel& model, const Vector& theta_star,
                                     const NoiseSpec& noise, int L, const QuadratureSpec& quad) {
  check_noise(noise);
  const TensorGrid grid = tensor_grid(model.d, quad);
  const AtomMeans means = atom_means(model, theta_star);
  const FeatureLayout layout(model.d, L);
  const int n = layout.total();

  struct Scratch {
    Matrix he;
    Vector psi;
    Vector y;
  };

  const Vector flat = accumulate_chunks(
      static_cast<std::int64_t>(model.atoms.size()) * grid.weights.size(), kChunk, n * n,
      [&](std::int64_t a, std::int64_t b, Vector& acc) {
        Scratch s{Matrix(model.d, L + 1), Vector(n), Vector(model.d)};
        Eigen::Map<Matrix> acc2(acc.data(), n, n);
        const std::int64_t nodes = grid.weights.size();
        for (std::int64_t i = a; i < b; ++i) {
          const std::size_t z = static_cast<std::size_t>(i / nodes);
          const std::int64_t p = i % nodes;
          s.y = noise.beta * means.mean[z] + noise.sigma * grid.nodes.row(p).transpose();
          feature_map_into(layout, s.y, noise.sigma, s.he, s.psi);
          acc2.noalias() += (model.weights[z] * grid.weights[p]) * (s.psi * s.psi.transpose());
        }
      },
      quad.threads);

  Matrix second = Eigen::Map<const Matrix>(flat.data(), n, n);
  const Vector mean = population_feature_mean(model, theta_star, noise, L).coords;
  Matrix cov = second - mean * mean.transpose();
  return 0.5 * (cov + cov.transpose());
}

Matrix restrict_to_normal(const Matrix& mat, const Matrix& Wbasis) {
  const int w = static_cast<int>(Wbasis.cols());
  if ((Wbasis.transpose() * Wbasis - Matrix::Identity(w, w)).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("restrict_to_normal: basis must be orthonormal");
  if (mat.rows() != Wbasis.rows() || mat.cols() != Wbasis.rows())
    throw std::invalid_argument("restrict_to_normal: shape mismatch");
  return Wbasis.transpose() * mat * Wbasis;
}

namespace {

// Sigma_L^{-1/2} J through the eigendecomposition; also reports conditioning.
Matrix whitened_jacobian(const Matrix& sigma, const Matrix& jac, double* cond) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 1e-12))
    throw std::runtime_error("gmom_information: feature covariance is numerically singular");
  if (cond) *cond = hi / lo;
  return es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
         (es.eigenvectors().transpose() * jac);
}

}  // namespace

Matrix gmom_information(const LatentModel& model, const Vector& theta_star,
                        const NoiseSpec& noise, int L, const Filtration& filtration,
                        const QuadratureSpec& quad) {
  const Matrix sigma = population_feature_covariance(model, theta_star, noise, L, quad);
  const Matrix jac = restricted_moment_jacobian(model, theta_star, noise, L, filtration);
  const Matrix x = whitened_jacobian(sigma, jac, nullptr);
  Matrix info = x.transpose() * x;
  return 0.5 * (info + info.transpose());
}

InfoReport info_discrepancy(const LatentModel& model, const Vector& theta_star,
                            const NoiseSpec& noise, int L, const Filtration& filtration,
                            const QuadratureSpec& quad) {
  InfoReport report;
  report.snr = noise.snr();
  report.L = L;

  report.I_obs_W =
      restrict_to_normal(observed_fisher(model, theta_star, noise, quad), filtration.Wbasis);

  const Matrix sigma = population_feature_covariance(model, theta_star, noise, L, quad);
  const Matrix jac = restricted_moment_jacobian(model, theta_star, noise, L, filtration);
  const Matrix x = whitened_jacobian(sigma, jac, &report.cond_sigma);
  Matrix gmom = x.transpose() * x;
  report.I_gmom_W = 0.5 * (gmom + gmom.transpose());

  const Matrix r = report.I_obs_W - report.I_gmom_W;
  Eigen::SelfAdjointEigenSolver<Matrix> es_r(r);
  report.discrepancy_op_norm = es_r.eigenvalues().cwiseAbs().maxCoeff();
  report.R_min_eig = es_r.eigenvalues().minCoeff();
  Eigen::SelfAdjointEigenSolver<Matrix> es_f(report.I_obs_W);
  report.fisher_min_eig = es_f.eigenvalues().minCoeff();
  return report;
}

namespace {

// Index of the filtration layer containing v, or -1 for the zero vector.
int layer_of(const Filtration& filtration, const Vector& v) {
  const double norm = v.norm();
  if (norm == 0.0) return -1;
  for (std::size_t k = 0; k < filtration.Ubases.size(); ++k) {
    const Matrix& u = filtration.Ubases[k];
    if (u.cols() == 0) continue;
    if ((u * (u.transpose() * v) - v).norm() <= 1e-8 * norm) return static_cast<int>(k);
  }
  throw std::invalid_argument("layer_bilinear: direction is not inside any filtration layer");
}

}  // namespace

std::pair<double, double> layer_bilinear(const LatentModel& model, const Vector& theta_star,
                                         const NoiseSpec& noise, const Vector& h, const Vector& g,
                                         const Filtration& filtration, const QuadratureSpec& quad) {
  const int kh = layer_of(filtration, h);
  const int kg = layer_of(filtration, g);
  if (kh < 0 || kg < 0) return {0.0, 0.0};

  const Matrix i_obs_w =
      restrict_to_normal(observed_fisher(model, theta_star, noise, quad), filtration.Wbasis);
  const Vector ch = filtration.Wbasis.transpose() * h;
  const Vector cg = filtration.Wbasis.transpose() * g;
  const double value = ch.dot(i_obs_w * cg);

  double prediction = 0.0;
  if (kh == kg) {
    const int k = kh + 1;  // layers are 1-based in the math
    const Matrix jac = signal_moment_jacobian(model, theta_star, k);
    const SymTensor dth{k, model.d, jac * h};
    const SymTensor dtg{k, model.d, jac * g};
    double snr_k = 1.0, kfact = 1.0;
    for (int i = 1; i <= k; ++i) {
      snr_k *= noise.snr();
      kfact *= i;
    }
    prediction = snr_k / kfact * sym_inner(dth, dtg);
  }
  return {value, prediction};
}

}  // namespace lowsnr
