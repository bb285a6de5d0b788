#include "lowsnr/estimators.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "lowsnr/hermite.hpp"
#include "lowsnr/quadrature.hpp"

namespace lowsnr {

std::pair<FeatureVector, Matrix> empirical_features(const Dataset& data, double sigma, int L,
                                                    int threads) {
  const std::int64_t n = data.samples.rows();
  if (n < 2) throw std::invalid_argument("empirical_features: need n >= 2");
  const int d = static_cast<int>(data.samples.cols());
  const FeatureLayout layout(d, L);
  const int nf = layout.total();

  // One flattened accumulator: [sum psi; sum psi psi^T].
  const Vector flat = accumulate_chunks(
      n, 4096, nf + nf * nf,
      [&](std::int64_t a, std::int64_t b, Vector& acc) {
        Matrix he(d, L + 1);
        Vector psi(nf), y(d);
        Eigen::Map<Vector> mean(acc.data(), nf);
        Eigen::Map<Matrix> second(acc.data() + nf, nf, nf);
        for (std::int64_t i = a; i < b; ++i) {
          y = data.samples.row(i).transpose();
          feature_map_into(layout, y, sigma, he, psi);
          mean += psi;
          second.noalias() += psi * psi.transpose();
        }
      },
      threads);

  FeatureVector m_n{d, L, flat.head(nf) / static_cast<double>(n)};
  Matrix sigma_hat =
      Eigen::Map<const Matrix>(flat.data() + nf, nf, nf) / static_cast<double>(n) -
      m_n.coords * m_n.coords.transpose();
  sigma_hat = 0.5 * (sigma_hat + sigma_hat.transpose());
  return {std::move(m_n), std::move(sigma_hat)};
}

Matrix weighting_matrix(const Matrix& sigma_hat, const WeightingChoice& choice) {
  switch (choice.kind) {
    case WeightingChoice::Kind::Identity:
      return Matrix::Identity(sigma_hat.rows(), sigma_hat.cols());
    case WeightingChoice::Kind::Fixed: {
      const Matrix& w = choice.fixed;
      if (w.rows() != w.cols() || (w - w.transpose()).cwiseAbs().maxCoeff() > 1e-10)
        throw std::invalid_argument("weighting_matrix: fixed matrix must be symmetric");
      Eigen::SelfAdjointEigenSolver<Matrix> es(w);
      if (es.eigenvalues().minCoeff() < -1e-10)
        throw std::invalid_argument("weighting_matrix: fixed matrix must be PSD");
      return w;
    }
    case WeightingChoice::Kind::EmpiricalOptimal:
      break;
  }
  if (!(choice.ridge >= 0.0))
    throw std::invalid_argument("weighting_matrix: ridge must be resolved to >= 0");
  if ((sigma_hat - sigma_hat.transpose()).cwiseAbs().maxCoeff() > 1e-8)
    throw std::invalid_argument("weighting_matrix: covariance must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (sigma_hat + sigma_hat.transpose()));
  const Vector inv = (es.eigenvalues().cwiseMax(0.0).array() + choice.ridge).inverse();
  if (!inv.allFinite())
    throw std::runtime_error("weighting_matrix: singular covariance with zero ridge");
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

OptResult quasi_newton(const Objective& fg, const Vector& init, const OptOptions& opts) {
  const int n = static_cast<int>(init.size());
  Vector x = init, grad(n);
  double f = fg(x, &grad);

  if (opts.verify) {
    // Directional derivative against a central difference along the gradient.
    const double gn = grad.norm();
    if (gn > 0.0) {
      const Vector dir = grad / gn;
      const double eps = 1e-6 * std::max(1.0, x.norm());
      const double fd = (fg(x + eps * dir, nullptr) - fg(x - eps * dir, nullptr)) / (2.0 * eps);
      const double an = grad.dot(dir);
      if (std::abs(fd - an) > 1e-4 * std::max({1.0, std::abs(fd), std::abs(an)}))
        throw std::invalid_argument("quasi_newton: gradient inconsistent with objective");
    }
  }

  Matrix h_inv = Matrix::Identity(n, n);
  OptResult result{x, f, grad.norm(), 0, grad.norm() <= opts.gtol};
  if (result.converged) return result;

  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    Vector dir = -(h_inv * grad);
    if (dir.dot(grad) >= 0.0) {  // safeguard against a corrupted metric
      h_inv.setIdentity();
      dir = -grad;
    }

    // Backtracking Armijo search.
    double step = 1.0;
    const double slope = grad.dot(dir);
    double f_new = std::numeric_limits<double>::infinity();
    Vector x_new;
    bool accepted = false;
    for (int ls = 0; ls < opts.max_line_steps; ++ls) {
      x_new = x + step * dir;
      f_new = fg(x_new, nullptr);
      if (std::isfinite(f_new) && f_new <= f + opts.armijo_c1 * step * slope) {
        accepted = true;
        break;
      }
      step *= opts.backtrack;
    }
    result.iterations = iter;
    if (!accepted) break;  // line-search failure: return the best iterate

    Vector grad_new(n);
    fg(x_new, &grad_new);
    const Vector s = x_new - x;
    const Vector yv = grad_new - grad;
    const double sy = s.dot(yv);
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      if (iter == 1) h_inv *= sy / yv.squaredNorm();  // standard initial scaling
      const Vector hy = h_inv * yv;
      const double yhy = yv.dot(hy);
      h_inv += ((sy + yhy) / (sy * sy)) * (s * s.transpose()) -
               (hy * s.transpose() + s * hy.transpose()) / sy;
    }

    x = std::move(x_new);
    f = f_new;
    grad = std::move(grad_new);
    result.x = x;
    result.f = f;
    result.grad_norm = grad.norm();
    if (result.grad_norm <= opts.gtol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

OptResult quasi_newton(const std::function<double(const Vector&)>& f,
                       const std::function<Vector(const Vector&)>& grad, const Vector& init,
                       const OptOptions& opts) {
  return quasi_newton(
      [&](const Vector& x, Vector* g) {
        if (g) *g = grad(x);
        return f(x);
      },
      init, opts);
}

namespace {

FitResult finish_fit(const LatentModel& model, const OptResult& opt, const Vector* reference) {
  FitResult fit;
  fit.theta_hat = opt.x;
  fit.objective_final = opt.f;
  fit.grad_norm_final = opt.grad_norm;
  fit.iterations = opt.iterations;
  fit.converged = opt.converged;
  if (reference) {
    fit.theta_aligned = align(model, opt.x, *reference);
    fit.d_eq_to_ref = (fit.theta_aligned - *reference).norm();
    fit.has_reference = true;
  } else {
    fit.theta_aligned = opt.x;
  }
  return fit;
}

}  // namespace

FitResult gmom_fit(const Dataset& data, const LatentModel& model, const NoiseSpec& noise, int L,
                   const WeightingChoice& weighting, const Vector& init, const OptOptions& opts,
                   const Vector* reference) {
  if (L < 1) throw std::invalid_argument("gmom_fit: L must be >= 1");
  const std::int64_t n = data.samples.rows();
  auto [m_n, sigma_hat] = empirical_features(data, noise.sigma, L);

  WeightingChoice resolved = weighting;
  if (resolved.kind == WeightingChoice::Kind::EmpiricalOptimal && resolved.ridge < 0.0)
    resolved.ridge = std::max(1e-10, 0.01 / std::sqrt(static_cast<double>(n)));
  const Matrix omega = weighting_matrix(sigma_hat, resolved);

  const Vector target = m_n.coords;
  const Objective fg = [&](const Vector& theta, Vector* grad) {
    const Vector resid = target - population_feature_mean(model, theta, noise, L).coords;
    const Vector omega_r = omega * resid;
    if (grad)
      *grad = -2.0 * (moment_map_jacobian(model, theta, noise, L).transpose() * omega_r);
    return resid.dot(omega_r);
  };

  return finish_fit(model, quasi_newton(fg, init, opts), reference);
}

FitResult mle_fit(const Dataset& data, const LatentModel& model, const NoiseSpec& noise,
                  const Vector& init, const OptOptions& opts, const Vector* reference) {
  const std::int64_t n = data.samples.rows();
  const int m = model.m;
  const double inv_n = 1.0 / static_cast<double>(n);

  // Negative average log-likelihood and its gradient in one pass; atom means
  // are formed once per evaluation, posteriors per row.
  const Objective fg = [&](const Vector& theta, Vector* grad) {
    const AtomMeans means = atom_means(model, theta);
    const int dim = grad ? 1 + m : 1;
    const Vector acc = accumulate_chunks(
        n, 4096, dim,
        [&](std::int64_t a, std::int64_t b, Vector& out) {
          Vector y(model.d);
          for (std::int64_t i = a; i < b; ++i) {
            y = data.samples.row(i).transpose();
            if (grad)
              out[0] += log_density_and_score(model, means, noise, y, out.tail(m));
            else
              out[0] += marginal_log_density(model, means, noise, y);
          }
        },
        1);
    if (grad) *grad = -inv_n * acc.tail(m);
    return -inv_n * acc[0];
  };

  FitResult fit = finish_fit(model, quasi_newton(fg, init, opts), reference);
  fit.objective_final = -fit.objective_final;  // report the log-likelihood itself
  return fit;
}

Vector perturbed_init(const Vector& center, double radius, Rng& rng) {
  Vector dir(center.size());
  double norm = 0.0;
  do {
    for (int i = 0; i < dir.size(); ++i) dir[i] = rng.normal();
    norm = dir.norm();
  } while (norm == 0.0);
  return center + (radius / norm) * dir;
}

FitResult multi_start(const std::function<FitResult(const Vector&)>& fit, const Vector& center,
                      double radius, int starts, Rng& rng, bool maximize) {
  if (starts < 1) throw std::invalid_argument("multi_start: starts must be >= 1");
  const double sign = maximize ? -1.0 : 1.0;
  FitResult best;
  bool have = false;
  for (int s = 0; s < starts; ++s) {
    FitResult r = fit(perturbed_init(center, radius, rng));
    const bool better =
        !have || (r.converged && !best.converged) ||
        (r.converged == best.converged &&
         sign * r.objective_final < sign * best.objective_final);
    if (better) {
      best = std::move(r);
      have = true;
    }
  }
  return best;
}

}  // namespace lowsnr
