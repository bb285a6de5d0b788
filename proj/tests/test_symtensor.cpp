#include <algorithm>
#include <map>
#include <vector>

#include "doctest.h"
#include "lowsnr/rng.hpp"
#include "lowsnr/symtensor.hpp"

using namespace lowsnr;

namespace {

// Dense oracle: expand a compressed symmetric tensor to all d^k entries and
// contract entrywise. Written independently of sym_inner's multiplicity
// shortcut so the two agree only if the multiplicity bookkeeping is right.
double dense_inner(const SymTensor& a, const SymTensor& b) {
  REQUIRE(a.d == b.d);
  REQUIRE(a.k == b.k);
  const auto& alphas = multi_indices(a.d, a.k);
  auto coord_of = [&](const SymTensor& t, const IndexVec& counts) {
    for (std::size_t i = 0; i < alphas.size(); ++i)
      if ((alphas[i] - counts).cwiseAbs().sum() == 0) return t.coords[static_cast<int>(i)];
    REQUIRE(false);
    return 0.0;
  };
  std::vector<int> tuple(a.k, 0);
  double acc = 0.0;
  while (true) {
    IndexVec counts = IndexVec::Zero(a.d);
    for (int idx : tuple) ++counts[idx];
    acc += coord_of(a, counts) * coord_of(b, counts);
    int pos = a.k - 1;
    while (pos >= 0 && tuple[pos] == a.d - 1) tuple[pos--] = 0;
    if (pos < 0) break;
    ++tuple[pos];
  }
  return acc;
}

SymTensor random_sym(int d, int k, Rng& rng) {
  SymTensor t = sym_zero(d, k);
  for (int i = 0; i < t.coords.size(); ++i) t.coords[i] = rng.normal();
  return t;
}

}  // namespace

TEST_SUITE("symtensor") {

TEST_CASE("coordinate counts and multiplicity sums") {
  CHECK(sym_coord_count(2, 2) == 3);
  CHECK(sym_coord_count(3, 3) == 10);
  CHECK(sym_coord_count(4, 2) == 10);
  CHECK(binomial(6, 3) == 20);
  for (int d = 1; d <= 4; ++d)
    for (int k = 1; k <= 4; ++k) {
      CHECK(static_cast<int>(multi_indices(d, k).size()) == sym_coord_count(d, k));
      // sum over alpha of mult(alpha) = d^k (multinomial theorem at all-ones)
      double dk = 1.0;
      for (int i = 0; i < k; ++i) dk *= d;
      CHECK(multiplicities(d, k).sum() == doctest::Approx(dk));
    }
}

TEST_CASE("enumeration fixes the documented order") {
  const auto& a22 = multi_indices(2, 2);
  REQUIRE(a22.size() == 3);
  CHECK(a22[0][0] == 2);
  CHECK(a22[0][1] == 0);
  CHECK(a22[1][0] == 1);
  CHECK(a22[1][1] == 1);
  CHECK(a22[2][0] == 0);
  CHECK(a22[2][1] == 2);
  // Leading exponent is non-increasing along the enumeration.
  const auto& a33 = multi_indices(3, 3);
  for (std::size_t i = 1; i < a33.size(); ++i) CHECK(a33[i][0] <= a33[i - 1][0]);
}

TEST_CASE("outer_power matches the entrywise product") {
  Rng rng(5);
  for (int d = 1; d <= 3; ++d)
    for (int k = 1; k <= 4; ++k) {
      Vector v(d);
      for (int i = 0; i < d; ++i) v[i] = rng.normal();
      const SymTensor t = outer_power(v, k);
      const auto& alphas = multi_indices(d, k);
      for (std::size_t a = 0; a < alphas.size(); ++a) {
        double prod = 1.0;
        for (int i = 0; i < d; ++i)
          for (int r = 0; r < alphas[a][i]; ++r) prod *= v[i];
        CHECK(t.coords[static_cast<int>(a)] == doctest::Approx(prod).epsilon(1e-12));
      }
    }
}

TEST_CASE("sym_inner agrees with the dense contraction oracle") {
  Rng rng(6);
  for (int d = 1; d <= 3; ++d)
    for (int k = 1; k <= 3; ++k) {
      const SymTensor a = random_sym(d, k, rng);
      const SymTensor b = random_sym(d, k, rng);
      CHECK(sym_inner(a, b) == doctest::Approx(dense_inner(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("rank-one inner products collapse to powered dot products") {
  // <u^k, v^k> = (u.v)^k, the standard identity for symmetric powers.
  Rng rng(7);
  for (int k = 1; k <= 4; ++k) {
    Vector u(3), v(3);
    for (int i = 0; i < 3; ++i) {
      u[i] = rng.normal();
      v[i] = rng.normal();
    }
    double expect = 1.0;
    for (int i = 0; i < k; ++i) expect *= u.dot(v);
    CHECK(sym_inner(outer_power(u, k), outer_power(v, k)) ==
          doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("orthonormal coordinates preserve the inner product") {
  Rng rng(8);
  const SymTensor a = random_sym(3, 3, rng);
  const SymTensor b = random_sym(3, 3, rng);
  const Vector oa = orthonormal_coords(a), ob = orthonormal_coords(b);
  CHECK(oa.dot(ob) == doctest::Approx(sym_inner(a, b)).epsilon(1e-12));
  const SymTensor back = from_orthonormal_coords(3, 3, oa);
  CHECK((back.coords - a.coords).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(sym_norm(a) == doctest::Approx(std::sqrt(sym_inner(a, a))));
}

}  // TEST_SUITE
