#include "doctest.h"

#include <cmath>
#include <random>

#include "mfg/kernel.hpp"

using namespace mfg;

namespace {

StateSpace line(int n, double spacing = 1.0) {
  Matrix pts(n, 1);
  for (int i = 0; i < n; ++i) pts(i, 0) = i * spacing;
  return StateSpace(pts);
}

}  // namespace

TEST_CASE("identity kernel Gram is the identity matrix") {
  const GramMatrix gm = gram(Kernel::identity(), line(4));
  CHECK(gm.matrix() == Matrix::Identity(4, 4));
}

TEST_CASE("gaussian Gram has unit diagonal on duplicate-free points") {
  const GramMatrix gm = gram(Kernel::gaussian(0.7), line(6, 0.3));
  for (int i = 0; i < 6; ++i) CHECK(gm.matrix()(i, i) == 1.0);
}

TEST_CASE("gaussian Gram on three collinear unit-spaced points") {
  const GramMatrix gm = gram(Kernel::gaussian(1.0), line(3));
  // exp(-1/2) and exp(-4/2), from the squared distances 1 and 4
  CHECK(gm.matrix()(0, 1) == doctest::Approx(0.6065306597126334).epsilon(1e-15));
  CHECK(gm.matrix()(1, 2) == doctest::Approx(0.6065306597126334).epsilon(1e-15));
  CHECK(gm.matrix()(0, 2) == doctest::Approx(0.1353352832366127).epsilon(1e-15));
  CHECK(gm.matrix()(0, 2) == gm.matrix()(2, 0));
}

TEST_CASE("non-PSD custom matrix is rejected") {
  Matrix bad(2, 2);
  bad << 0.1, 0.9, 0.9, 0.1;  // eigenvalues 1.0 and -0.8
  CHECK_THROWS_AS((GramMatrix(bad, line(2))), NonPsd);
}

TEST_CASE("embedding under the identity kernel is the distribution itself") {
  const GramMatrix id = gram(Kernel::identity(), line(5));
  std::mt19937_64 rng(1);
  const Distribution L(random_simplex(rng, 5));
  const EmbeddedMeanField mu = embed(id, L);
  CHECK(mu.values == L.weights());
}

TEST_CASE("embedding a point mass picks out a Gram column") {
  const GramMatrix gm = gram(Kernel::laplace(2.0), line(4));
  const EmbeddedMeanField mu = embed(gm, Distribution::point_mass(4, 2));
  CHECK((mu.values - gm.matrix().col(2)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("embedding the uniform law gives Gram row averages") {
  const GramMatrix gm = gram(Kernel::gaussian(1.0), line(3));
  const EmbeddedMeanField mu = embed(gm, Distribution::uniform(3));
  for (int i = 0; i < 3; ++i) {
    double avg = 0.0;
    for (int j = 0; j < 3; ++j) avg += gm.matrix()(i, j) / 3.0;
    CHECK(mu.values(i) == doctest::Approx(avg).epsilon(1e-15));
  }
}

TEST_CASE("rkhs distance basics") {
  const GramMatrix gm = gram(Kernel::gaussian(1.0), line(4));
  std::mt19937_64 rng(2);
  const Distribution L(random_simplex(rng, 4));
  CHECK(rkhs_distance(gm, L, L) == 0.0);

  const GramMatrix id = gram(Kernel::identity(), line(4));
  const Distribution Lp(random_simplex(rng, 4));
  CHECK(rkhs_distance(id, L, Lp) ==
        doctest::Approx((L.weights() - Lp.weights()).norm()).epsilon(1e-14));
}

TEST_CASE("rkhs distance is bounded by 2 for every shipped kernel") {
  std::mt19937_64 rng(3);
  const StateSpace states = line(6, 0.8);
  const Kernel kernels[] = {Kernel::identity(), Kernel::gaussian(1.3),
                            Kernel::laplace(0.9)};
  for (const Kernel& kernel : kernels) {
    const GramMatrix gm = gram(kernel, states);
    for (int trial = 0; trial < 300; ++trial) {
      const Distribution a(random_simplex(rng, 6));
      const Distribution b(random_simplex(rng, 6));
      CHECK(rkhs_distance(gm, a, b) <= 2.0 + 1e-10);
    }
  }
}

TEST_CASE("rkhs distance satisfies the triangle inequality") {
  std::mt19937_64 rng(4);
  const GramMatrix gm = gram(Kernel::gaussian(0.9), line(5));
  for (int trial = 0; trial < 1000; ++trial) {
    const Distribution a(random_simplex(rng, 5));
    const Distribution b(random_simplex(rng, 5));
    const Distribution c(random_simplex(rng, 5));
    CHECK(rkhs_distance(gm, a, c) <=
          rkhs_distance(gm, a, b) + rkhs_distance(gm, b, c) + 1e-10);
  }
}

TEST_CASE("embedding is linear in the distribution") {
  std::mt19937_64 rng(5);
  const GramMatrix gm = gram(Kernel::gaussian(1.1), line(6));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector w1 = random_simplex(rng, 6);
    const Vector w2 = random_simplex(rng, 6);
    const double a = unit(rng);
    const Vector mixed_values =
        embed(gm, Distribution(Vector(a * w1 + (1.0 - a) * w2), 1e-9)).values;
    const Vector combo = a * embed(gm, Distribution(w1)).values +
                         (1.0 - a) * embed(gm, Distribution(w2)).values;
    CHECK((mixed_values - combo).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("embedded norm never exceeds one") {
  std::mt19937_64 rng(6);
  const GramMatrix gm = gram(Kernel::gaussian(2.0), line(8));
  for (int trial = 0; trial < 200; ++trial) {
    const EmbeddedMeanField mu = embed(gm, Distribution(random_simplex(rng, 8)));
    CHECK(mu.norm <= 1.0 + 1e-12);
  }
}
