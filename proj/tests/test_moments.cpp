#include <cmath>
#include <vector>

#include "doctest.h"
#include "lowsnr/moments.hpp"
#include "lowsnr/quadrature.hpp"
#include "lowsnr/rng.hpp"

using namespace lowsnr;

namespace {

Vector theta_star() {
  Vector t(3);
  t << 1.0, 2.0, -4.0;
  return t;
}

// Row index of a multi-index (given as counts) in the fixed enumeration.
int row_of(int d, int k, const IndexVec& counts) {
  const auto& alphas = multi_indices(d, k);
  for (std::size_t i = 0; i < alphas.size(); ++i)
    if ((alphas[i] - counts).cwiseAbs().sum() == 0) return static_cast<int>(i);
  REQUIRE(false);
  return -1;
}

IndexVec rotate_counts(const IndexVec& counts) {
  IndexVec out(counts.size());
  for (int i = 0; i < counts.size(); ++i) out[(i + 1) % counts.size()] = counts[i];
  return out;
}

// Sum of Jacobian rows over the cyclic-relabeling orbit of a representative
// multi-index. For the shift model these sums are gradients of the classical
// power-sum and correlation invariants, which gives hand-checkable values.
Vector orbit_row_sum(const Matrix& jac, int d, int k, const IndexVec& rep) {
  Vector acc = Vector::Zero(jac.cols());
  IndexVec cur = rep;
  for (int step = 0; step < d; ++step) {
    acc += jac.row(row_of(d, k, cur)).transpose();
    cur = rotate_counts(cur);
    bool back = true;
    for (int i = 0; i < d; ++i) back = back && cur[i] == rep[i];
    if (back && step + 1 < d) break;  // orbit shorter than the group
  }
  return acc;
}

Matrix fd_moment_jacobian(const LatentModel& model, const Vector& theta, int k, double h = 1e-6) {
  const int rows = sym_coord_count(model.d, k);
  Matrix jac(rows, model.m);
  for (int c = 0; c < model.m; ++c) {
    Vector tp = theta, tm = theta;
    tp[c] += h;
    tm[c] -= h;
    jac.col(c) = (signal_moment(model, tp, k).coords - signal_moment(model, tm, k).coords) /
                 (2.0 * h);
  }
  return jac;
}

}  // namespace

TEST_SUITE("moments") {

TEST_CASE("single-atom signal moments are parameter outer powers") {
  const LatentModel model = build_model({"gmm", 3, 1});
  Rng rng(21);
  Vector theta(3);
  for (int i = 0; i < 3; ++i) theta[i] = rng.normal();
  for (int k = 1; k <= 4; ++k) {
    const SymTensor t = signal_moment(model, theta, k);
    const SymTensor expect = outer_power(theta, k);
    CHECK((t.coords - expect.coords).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("shift-model second moment has the hand value") {
  const LatentModel model = build_model({"cyclic_mra", 2, 0});
  Vector theta(2);
  theta << 0.7, -0.4;
  const SymTensor t2 = signal_moment(model, theta, 2);
  const double same = 0.5 * (0.7 * 0.7 + 0.4 * 0.4);
  const double cross = 0.7 * -0.4;
  IndexVec a(2);
  a << 2, 0;
  CHECK(t2.coords[row_of(2, 2, a)] == doctest::Approx(same));
  a << 1, 1;
  CHECK(t2.coords[row_of(2, 2, a)] == doctest::Approx(cross));
  a << 0, 2;
  CHECK(t2.coords[row_of(2, 2, a)] == doctest::Approx(same));
}

TEST_CASE("moment coordinates of the shift model reduce to cyclic invariants") {
  const LatentModel model = build_model({"cyclic_mra", 3, 0});
  const Vector theta = theta_star();
  // p1 = -1, p2 = 21, q = -10, r1 = -55, r2 = 2, r3 = 32 at (1, 2, -4).
  IndexVec a(3);
  a << 1, 0, 0;
  CHECK(signal_moment(model, theta, 1).coords[row_of(3, 1, a)] ==
        doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
  a << 2, 0, 0;
  CHECK(signal_moment(model, theta, 2).coords[row_of(3, 2, a)] ==
        doctest::Approx(21.0 / 3.0).epsilon(1e-12));
  a << 1, 1, 0;
  CHECK(signal_moment(model, theta, 2).coords[row_of(3, 2, a)] ==
        doctest::Approx(-10.0 / 3.0).epsilon(1e-12));
  a << 3, 0, 0;
  CHECK(signal_moment(model, theta, 3).coords[row_of(3, 3, a)] ==
        doctest::Approx(-55.0 / 3.0).epsilon(1e-12));
  a << 2, 1, 0;
  CHECK(signal_moment(model, theta, 3).coords[row_of(3, 3, a)] ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  a << 2, 0, 1;
  CHECK(signal_moment(model, theta, 3).coords[row_of(3, 3, a)] ==
        doctest::Approx(32.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("jacobian orbit sums equal the frozen invariant gradients") {
  // Independent anchor: gradients of p1, p2, q, r1, r2, r3 at (1, 2, -4),
  // derived by hand from the invariant polynomials themselves.
  const LatentModel model = build_model({"cyclic_mra", 3, 0});
  const Vector theta = theta_star();
  const Matrix j1 = signal_moment_jacobian(model, theta, 1);
  const Matrix j2 = signal_moment_jacobian(model, theta, 2);
  const Matrix j3 = signal_moment_jacobian(model, theta, 3);

  auto expect = [](double x, double y, double z) {
    Vector v(3);
    v << x, y, z;
    return v;
  };
  IndexVec a(3);
  a << 1, 0, 0;
  CHECK((orbit_row_sum(j1, 3, 1, a) - expect(1, 1, 1)).cwiseAbs().maxCoeff() < 1e-12);
  a << 2, 0, 0;
  CHECK((orbit_row_sum(j2, 3, 2, a) - expect(2, 4, -8)).cwiseAbs().maxCoeff() < 1e-12);
  a << 1, 1, 0;
  CHECK((orbit_row_sum(j2, 3, 2, a) - expect(-2, -3, 3)).cwiseAbs().maxCoeff() < 1e-12);
  a << 3, 0, 0;
  CHECK((orbit_row_sum(j3, 3, 3, a) - expect(3, 12, 48)).cwiseAbs().maxCoeff() < 1e-12);
  a << 2, 1, 0;
  CHECK((orbit_row_sum(j3, 3, 3, a) - expect(20, -15, -4)).cwiseAbs().maxCoeff() < 1e-12);
  a << 2, 0, 1;
  CHECK((orbit_row_sum(j3, 3, 3, a) - expect(-4, 20, -15)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("analytic moment jacobians match finite differences") {
  Rng rng(22);
  for (const ModelSpec spec :
       {ModelSpec{"gmm", 2, 2}, ModelSpec{"cyclic_mra", 3, 0}, ModelSpec{"dihedral_mra", 3, 0}}) {
    const LatentModel model = build_model(spec);
    Vector theta(model.m);
    for (int i = 0; i < model.m; ++i) theta[i] = rng.normal();
    for (int k = 1; k <= 3; ++k) {
      const Matrix analytic = signal_moment_jacobian(model, theta, k);
      const Matrix fd = fd_moment_jacobian(model, theta, k);
      CHECK((analytic - fd).cwiseAbs().maxCoeff() < 1e-7 * std::max(1.0, theta.norm()));
    }
  }
}

TEST_CASE("population feature mean equals the quadrature expectation") {
  const LatentModel model = build_model({"cyclic_mra", 2, 0});
  Vector theta(2);
  theta << 0.7, -0.4;
  const NoiseSpec noise{0.6, 1.3};
  const int L = 3;
  const FeatureVector analytic = population_feature_mean(model, theta, noise, L);

  QuadratureSpec quad;
  const TensorGrid grid = tensor_grid(2, quad);
  Vector acc = Vector::Zero(analytic.coords.size());
  for (std::size_t z = 0; z < model.atoms.size(); ++z) {
    const Vector mean = noise.beta * (model.atoms[z] * theta);
    for (int p = 0; p < grid.weights.size(); ++p) {
      const Vector y = mean + noise.sigma * grid.nodes.row(p).transpose();
      acc += (model.weights[z] * grid.weights[p]) * feature_map(y, noise.sigma, L).coords;
    }
  }
  CHECK((analytic.coords - acc).cwiseAbs().maxCoeff() < 1e-10);

  // block scaling: order-j block is (beta/sigma)^j T_j in orthonormal coords
  for (int j = 1; j <= L; ++j) {
    const SymTensor block = feature_block(analytic, j);
    const SymTensor tj = signal_moment(model, theta, j);
    const double tpow = std::pow(noise.t(), j);
    CHECK((block.coords - tpow * tj.coords).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("moment map jacobian matches finite differences of the mean") {
  const LatentModel model = build_model({"gmm", 2, 2});
  Rng rng(23);
  Vector theta(4);
  for (int i = 0; i < 4; ++i) theta[i] = rng.normal();
  const NoiseSpec noise{0.5, 1.1};
  const int L = 3;
  const Matrix analytic = moment_map_jacobian(model, theta, noise, L);
  const double h = 1e-6;
  Matrix fd(analytic.rows(), analytic.cols());
  for (int c = 0; c < 4; ++c) {
    Vector tp = theta, tm = theta;
    tp[c] += h;
    tm[c] -= h;
    fd.col(c) = (population_feature_mean(model, tp, noise, L).coords -
                 population_feature_mean(model, tm, noise, L).coords) /
                (2.0 * h);
  }
  CHECK((analytic - fd).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("shift-model filtration recovers the three layers") {
  const LatentModel model = build_model({"cyclic_mra", 3, 0});
  const Filtration f = moment_filtration(model, theta_star(), 3);
  REQUIRE(f.reached);
  CHECK(f.r_loc == 3);
  REQUIRE(f.Vbases.size() >= 3);
  CHECK(f.Vbases[0].cols() == 3);
  CHECK(f.Vbases[1].cols() == 2);
  CHECK(f.Vbases[2].cols() == 1);
  REQUIRE(f.Ubases.size() == 3);

  auto cosine_to = [](const Matrix& u, double x, double y, double z) {
    Vector ref(3);
    ref << x, y, z;
    ref.normalize();
    REQUIRE(u.cols() == 1);
    return std::abs(u.col(0).dot(ref));
  };
  CHECK(cosine_to(f.Ubases[0], 1, 1, 1) > 1.0 - 1e-9);
  CHECK(cosine_to(f.Ubases[1], 4, 7, -11) > 1.0 - 1e-9);
  CHECK(cosine_to(f.Ubases[2], -6, 5, 1) > 1.0 - 1e-9);

  // U_k sits inside V_k and is orthogonal to V_{k+1}.
  for (int k = 0; k < 3; ++k) {
    const Matrix& u = f.Ubases[k];
    CHECK((u.transpose() * u - Matrix::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff() <
          1e-10);
    const Matrix& v = f.Vbases[k];
    CHECK((u - v * (v.transpose() * u)).cwiseAbs().maxCoeff() < 1e-9);
    if (k + 1 < static_cast<int>(f.Vbases.size()))
      CHECK((f.Vbases[k + 1].transpose() * u).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("filtration respects a restricted normal space") {
  const LatentModel model = build_model({"cyclic_mra", 3, 0});
  Matrix w(3, 2);
  w.setZero();
  w(0, 0) = 1.0;
  w(1, 1) = 1.0;  // span(e1, e2)
  const Filtration f = moment_filtration(model, theta_star(), 3, 1e-9, &w);
  REQUIRE(f.reached);
  // Within span(e1, e2): V_2 = {w : w_1 + w_2 = 0}, one dimension, and the
  // second-order map already separates it, so the filtration ends at 2.
  CHECK(f.r_loc == 2);
  CHECK(f.Vbases[0].cols() == 2);
  CHECK(f.Vbases[1].cols() == 1);
  Vector dir(3);
  dir << 1.0, -1.0, 0.0;
  dir.normalize();
  CHECK(std::abs(f.Vbases[1].col(0).dot(dir)) > 1.0 - 1e-9);
}

TEST_CASE("filtration reports an unreached cutoff honestly") {
  const LatentModel model = build_model({"gmm", 2, 2});
  Vector theta(4);
  theta << 0.9, -0.3, 0.2, 1.4;
  const Filtration f = moment_filtration(model, theta, 1);
  CHECK_FALSE(f.reached);
  CHECK(f.r_loc == kFiltrationUnreached);
  CHECK(f.Vbases.size() == 2);   // V_1 and the surviving V_2
  CHECK(f.Vbases[1].cols() > 0);
}

TEST_CASE("restricted moment jacobian composes the pieces") {
  const LatentModel model = build_model({"cyclic_mra", 3, 0});
  const Vector theta = theta_star();
  const NoiseSpec noise{0.4, 1.0};
  const Filtration f = moment_filtration(model, theta, 3);
  const Matrix full = moment_map_jacobian(model, theta, noise, 3);
  const Matrix restricted = restricted_moment_jacobian(model, theta, noise, 3, f);
  CHECK((restricted - full * f.Wbasis).cwiseAbs().maxCoeff() < 1e-12);
}

}  // TEST_SUITE
