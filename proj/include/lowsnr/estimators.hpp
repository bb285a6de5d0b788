#pragma once

// Empirical feature statistics, the ridge-regularized optimal weighting, and
// the two local estimators: weighted method-of-moments fits of the stacked
// Hermite features, and the marginal maximum-likelihood baseline. Both are
// local quasi-Newton fits from a supplied initial point.

#include <functional>
#include <utility>

#include "lowsnr/models.hpp"
#include "lowsnr/moments.hpp"
#include "lowsnr/types.hpp"

namespace lowsnr {

struct WeightingChoice {
  enum class Kind { EmpiricalOptimal, Identity, Fixed };
  Kind kind = Kind::EmpiricalOptimal;
  double ridge = -1.0;  // < 0: resolve to max(1e-10, 0.01/sqrt(n)) at fit time
  Matrix fixed;

  static WeightingChoice empirical_optimal(double ridge = -1.0) {
    return WeightingChoice{Kind::EmpiricalOptimal, ridge, {}};
  }
  static WeightingChoice identity() { return WeightingChoice{Kind::Identity, 0.0, {}}; }
  static WeightingChoice fixed_matrix(Matrix w) {
    return WeightingChoice{Kind::Fixed, 0.0, std::move(w)};
  }
};

// M_n = mean of psi(y_i) and the centered covariance, one pass over the rows
// with deterministic chunked accumulation.
std::pair<FeatureVector, Matrix> empirical_features(const Dataset& data, double sigma, int L,
                                                    int threads = 1);

// (Sigma_hat + ridge I)^{-1} via symmetric eigen-factorization (negative
// eigenvalues from round-off clamp to zero first), or the identity, or a
// validated fixed PSD matrix. EmpiricalOptimal here requires ridge >= 0.
Matrix weighting_matrix(const Matrix& sigma_hat, const WeightingChoice& choice);

struct OptOptions {
  double gtol = 1e-8;
  int max_iter = 500;
  bool verify = false;       // finite-difference consistency probe at init
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  int max_line_steps = 40;
};

struct OptResult {
  Vector x;
  double f = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

// f(x, grad): returns the objective and, when grad != nullptr, fills it.
using Objective = std::function<double(const Vector&, Vector*)>;

// BFGS with backtracking Armijo line search; stops at ||grad|| <= gtol.
OptResult quasi_newton(const Objective& fg, const Vector& init, const OptOptions& opts = {});
OptResult quasi_newton(const std::function<double(const Vector&)>& f,
                       const std::function<Vector(const Vector&)>& grad, const Vector& init,
                       const OptOptions& opts = {});

struct FitResult {
  Vector theta_hat;
  Vector theta_aligned;       // equals theta_hat when no reference was given
  double objective_final = 0.0;
  double grad_norm_final = 0.0;
  int iterations = 0;
  bool converged = false;
  double d_eq_to_ref = 0.0;   // valid when has_reference
  bool has_reference = false;
};

// Minimizes (M_n - M(theta))^T Omega (M_n - M(theta)) with Omega built once
// from the data and held fixed; analytic gradient -2 DM^T Omega (M_n - M).
FitResult gmom_fit(const Dataset& data, const LatentModel& model, const NoiseSpec& noise, int L,
                   const WeightingChoice& weighting, const Vector& init,
                   const OptOptions& opts = {}, const Vector* reference = nullptr);

// Maximizes the average marginal log-likelihood; gradient is the averaged
// score. Non-convergence is flagged on the result, not thrown.
FitResult mle_fit(const Dataset& data, const LatentModel& model, const NoiseSpec& noise,
                  const Vector& init, const OptOptions& opts = {},
                  const Vector* reference = nullptr);

// center + radius * (uniform direction); plumbing for multi-start and
// truth-perturbed initialization.
Vector perturbed_init(const Vector& center, double radius, Rng& rng);

// Runs `fit` from `starts` random points in the radius-ball around `center`
// and keeps the best final objective, preferring converged runs. Pass
// maximize = true when the fit reports a maximized objective (mle_fit).
FitResult multi_start(const std::function<FitResult(const Vector&)>& fit, const Vector& center,
                      double radius, int starts, Rng& rng, bool maximize = false);

}  // namespace lowsnr
