#include "lowsnr/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace lowsnr {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

Matrix shift_matrix(int d, int l) {
  Matrix t = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) t(i, ((i - l) % d + d) % d) = 1.0;
  return t;
}

Matrix reflection_matrix(int d) {
  Matrix r = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) r(i, ((-i) % d + d) % d) = 1.0;
  return r;
}

std::vector<Matrix> permutation_matrices(int n, int block) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<Matrix> out;
  do {
    Matrix p = Matrix::Zero(n * block, n * block);
    for (int b = 0; b < n; ++b)
      p.block(b * block, perm[b] * block, block, block).setIdentity();
    out.push_back(std::move(p));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

}  // namespace

void validate_model(const LatentModel& model) {
  if (model.d < 1 || model.m < 1) throw std::invalid_argument("model: dimensions must be >= 1");
  if (model.weights.size() != model.atoms.size() || model.atoms.empty())
    throw std::invalid_argument("model: atom/weight lists inconsistent");
  double wsum = 0.0;
  for (double w : model.weights) {
    if (w < 0.0) throw std::invalid_argument("model: negative weight");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-12) throw std::invalid_argument("model: weights must sum to 1");
  Matrix info = Matrix::Zero(model.m, model.m);
  for (std::size_t z = 0; z < model.atoms.size(); ++z) {
    const Matrix& a = model.atoms[z];
    if (a.rows() != model.d || a.cols() != model.m)
      throw std::invalid_argument("model: atom shape mismatch");
    info += model.weights[z] * a.transpose() * a;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(info);
  if (es.eigenvalues().minCoeff() <= 1e-10)
    throw std::invalid_argument("model: sum_z mu(z) A(z)^T A(z) is not positive definite");
  if (model.group.empty()) throw std::invalid_argument("model: group must contain the identity");
  for (const Matrix& g : model.group)
    if (g.rows() != model.m || g.cols() != model.m)
      throw std::invalid_argument("model: group element shape mismatch");
  if (!model.group[0].isIdentity(1e-12))
    throw std::invalid_argument("model: group element 0 must be the identity");
  // Full pairwise closure check; kept to small groups, which covers the built-ins.
  if (model.group.size() <= 100) {
    for (const Matrix& g : model.group)
      for (const Matrix& h : model.group) {
        const Matrix gh = g * h;
        bool found = false;
        for (const Matrix& e : model.group)
          if ((gh - e).cwiseAbs().maxCoeff() <= 1e-10) {
            found = true;
            break;
          }
        if (!found) throw std::invalid_argument("model: group not closed under composition");
      }
  }
}

LatentModel build_model(const ModelSpec& spec) {
  if (spec.d < 1) throw std::invalid_argument("build_model: d must be >= 1");
  LatentModel model;
  model.d = spec.d;
  model.name = spec.model;

  if (spec.model == "gmm") {
    const int K = spec.K;
    if (K < 1) throw std::invalid_argument("build_model: gmm needs K >= 1");
    model.m = K * spec.d;
    for (int z = 0; z < K; ++z) {
      Matrix a = Matrix::Zero(spec.d, model.m);
      a.block(0, z * spec.d, spec.d, spec.d).setIdentity();
      model.atoms.push_back(std::move(a));
      model.weights.push_back(1.0 / K);
    }
    model.group = permutation_matrices(K, spec.d);
  } else if (spec.model == "cyclic_mra") {
    model.m = spec.d;
    for (int l = 0; l < spec.d; ++l) {
      model.atoms.push_back(shift_matrix(spec.d, l));
      model.weights.push_back(1.0 / spec.d);
    }
    model.group = model.atoms;
  } else if (spec.model == "sign_flip") {
    if (spec.d > 20) throw std::invalid_argument("build_model: sign_flip limited to d <= 20");
    model.m = spec.d;
    const int n = 1 << spec.d;
    for (int code = 0; code < n; ++code) {
      Vector s(spec.d);
      for (int i = 0; i < spec.d; ++i) s[i] = (code >> i) & 1 ? -1.0 : 1.0;
      model.atoms.push_back(Matrix(s.asDiagonal()));
      model.weights.push_back(1.0 / n);
    }
    model.group = model.atoms;
  } else if (spec.model == "permutation") {
    model.m = spec.d;
    model.atoms = permutation_matrices(spec.d, 1);
    model.weights.assign(model.atoms.size(), 1.0 / static_cast<double>(model.atoms.size()));
    model.group = model.atoms;
  } else if (spec.model == "dihedral_mra") {
    model.m = spec.d;
    const Matrix refl = reflection_matrix(spec.d);
    for (int l = 0; l < spec.d; ++l) {
      model.atoms.push_back(shift_matrix(spec.d, l));
      model.weights.push_back(0.5 / spec.d);
    }
    for (int l = 0; l < spec.d; ++l) {
      model.atoms.push_back(shift_matrix(spec.d, l) * refl);
      model.weights.push_back(0.5 / spec.d);
    }
    model.group = model.atoms;
  } else {
    throw std::invalid_argument("build_model: unknown model '" + spec.model + "'");
  }

  validate_model(model);
  return model;
}

Dataset sample(const LatentModel& model, const Vector& theta, const NoiseSpec& noise,
               std::int64_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  if (theta.size() != model.m) throw std::invalid_argument("sample: theta dimension mismatch");
  if (!(noise.sigma >= 0.0)) throw std::invalid_argument("sample: sigma must be >= 0");

  const AtomMeans means = atom_means(model, theta);
  std::vector<double> cdf(model.weights.size());
  std::partial_sum(model.weights.begin(), model.weights.end(), cdf.begin());

  Dataset data;
  data.samples.resize(n, model.d);
  data.seed = seed;
  data.model_name = model.name;
  data.theta = theta;
  data.beta = noise.beta;
  data.sigma = noise.sigma;

  Rng rng(seed);
  for (std::int64_t i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    std::size_t z = 0;
    while (z + 1 < cdf.size() && u > cdf[z]) ++z;
    for (int j = 0; j < model.d; ++j)
      data.samples(i, j) = noise.beta * means.mean[z][j] + noise.sigma * rng.normal();
  }
  return data;
}

AtomMeans atom_means(const LatentModel& model, const Vector& theta) {
  AtomMeans means;
  means.mean.reserve(model.atoms.size());
  for (const Matrix& a : model.atoms) means.mean.push_back(a * theta);
  return means;
}

namespace {

// Posterior log-weights log mu(z) - ||y - beta v_z||^2 / (2 sigma^2), plus
// the log marginal. Shared by density and score.
double posterior(const LatentModel& model, const AtomMeans& means, const NoiseSpec& noise,
                 const Vector& y, std::vector<double>& logw) {
  check_noise(noise);
  const double inv2s2 = 0.5 / (noise.sigma * noise.sigma);
  const std::size_t nz = means.mean.size();
  logw.resize(nz);
  double lmax = -std::numeric_limits<double>::infinity();
  for (std::size_t z = 0; z < nz; ++z) {
    const double r2 = (y - noise.beta * means.mean[z]).squaredNorm();
    logw[z] = std::log(model.weights[z]) - r2 * inv2s2;
    lmax = std::max(lmax, logw[z]);
  }
  double s = 0.0;
  for (std::size_t z = 0; z < nz; ++z) s += std::exp(logw[z] - lmax);
  const double logsum = lmax + std::log(s);
  for (std::size_t z = 0; z < nz; ++z) logw[z] -= logsum;
  return logsum - 0.5 * model.d * (kLog2Pi + 2.0 * std::log(noise.sigma));
}

}  // namespace

double marginal_log_density(const LatentModel& model, const AtomMeans& means,
                            const NoiseSpec& noise, const Vector& y) {
  std::vector<double> logw;
  return posterior(model, means, noise, y, logw);
}

double marginal_log_density(const LatentModel& model, const Vector& theta,
                            const NoiseSpec& noise, const Vector& y) {
  return marginal_log_density(model, atom_means(model, theta), noise, y);
}

Vector score(const LatentModel& model, const AtomMeans& means, const NoiseSpec& noise,
             const Vector& y) {
  std::vector<double> logw;
  posterior(model, means, noise, y, logw);
  const double scale = noise.beta / (noise.sigma * noise.sigma);
  Vector g = Vector::Zero(model.m);
  for (std::size_t z = 0; z < means.mean.size(); ++z) {
    const double w = std::exp(logw[z]);
    g.noalias() += (w * scale) * (model.atoms[z].transpose() * (y - noise.beta * means.mean[z]));
  }
  return g;
}

Vector score(const LatentModel& model, const Vector& theta, const NoiseSpec& noise,
             const Vector& y) {
  return score(model, atom_means(model, theta), noise, y);
}

double log_density_and_score(const LatentModel& model, const AtomMeans& means,
                             const NoiseSpec& noise, const Vector& y,
                             Eigen::Ref<Vector> score_out) {
  std::vector<double> logw;
  const double logp = posterior(model, means, noise, y, logw);
  const double scale = noise.beta / (noise.sigma * noise.sigma);
  for (std::size_t z = 0; z < means.mean.size(); ++z) {
    const double w = std::exp(logw[z]);
    score_out.noalias() +=
        (w * scale) * (model.atoms[z].transpose() * (y - noise.beta * means.mean[z]));
  }
  return logp;
}

double equivalence_distance(const LatentModel& model, const Vector& theta0,
                            const Vector& theta1, std::size_t group_cap) {
  if (model.group.size() > group_cap)
    throw std::runtime_error("equivalence_distance: group too large to enumerate");
  double best = std::numeric_limits<double>::infinity();
  for (const Matrix& g : model.group) best = std::min(best, (theta0 - g * theta1).norm());
  return best;
}

Vector align(const LatentModel& model, const Vector& theta_hat, const Vector& theta_ref,
             std::size_t group_cap) {
  if (model.group.size() > group_cap)
    throw std::runtime_error("align: group too large to enumerate");
  double best = std::numeric_limits<double>::infinity();
  Vector out = theta_hat;
  for (const Matrix& g : model.group) {
    const Vector cand = g * theta_hat;
    const double dist = (cand - theta_ref).norm();
    if (dist < best) {
      best = dist;
      out = cand;
    }
  }
  return out;
}

std::pair<Dataset, LatentModel> whiten(const Dataset& data, const Matrix& Sigma,
                                       const LatentModel& model) {
  if (Sigma.rows() != model.d || Sigma.cols() != model.d)
    throw std::invalid_argument("whiten: Sigma shape mismatch");
  if ((Sigma - Sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("whiten: Sigma must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(Sigma);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("whiten: Sigma must be positive definite");
  const Matrix root_inv = es.eigenvectors() *
                          es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                          es.eigenvectors().transpose();
  Dataset wdata = data;
  wdata.samples = data.samples * root_inv.transpose();
  LatentModel wmodel = model;
  for (Matrix& a : wmodel.atoms) a = root_inv * a;
  return {std::move(wdata), std::move(wmodel)};
}

}  // namespace lowsnr
