#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "confstab/error.hpp"
#include "confstab/kernel.hpp"
#include "oracles.hpp"

using namespace confstab;

TEST_CASE("gram examples") {
  const std::vector<FeatureVector> one{{0.3, -1.2}};
  CHECK(gram(Kernel::gaussian(2.5), one).matrix() == Matrix::from_rows({{1.0}}));
  const std::vector<FeatureVector> basis{{1, 0}, {0, 1}};
  CHECK(gram(Kernel::linear(), basis).matrix() == Matrix::identity(2));
  const std::vector<FeatureVector> line{{0.0}, {1.0}};
  const auto g = gram(Kernel::gaussian(1.0), line);
  CHECK(g(0, 1) == doctest::Approx(0.36787944117144233).epsilon(1e-15));
  CHECK(g(1, 0) == g(0, 1));
}

TEST_CASE("gram rejects mixed dimensions") {
  const std::vector<FeatureVector> bad{{1, 0}, {0, 1, 2}};
  CHECK_THROWS_AS(gram(Kernel::linear(), bad), InvalidInputError);
  CHECK_THROWS_AS(common_dimension(bad), InvalidInputError);
  CHECK_THROWS_AS(Kernel::gaussian(1.0)(FeatureVector{1.0}, FeatureVector{1.0, 2.0}), InvalidInputError);
}

TEST_CASE("kappa") {
  CHECK(kappa(Kernel::gaussian(0.1)) == 1.0);
  CHECK(kappa(Kernel::gaussian(7.0), 100.0) == 1.0);
  CHECK(kappa(Kernel::linear(), 2.0) == doctest::Approx(2.0));
  CHECK(kappa(Kernel::polynomial(2, 1.0), 1.0) == doctest::Approx(2.0));
  CHECK_THROWS_AS(kappa(Kernel::linear()), UnboundedKernelError);
  CHECK_THROWS_AS(kappa(Kernel::polynomial(3, 0.5)), UnboundedKernelError);
}

TEST_CASE("kernel constructors validate parameters") {
  CHECK_THROWS_AS(Kernel::gaussian(0.0), InvalidInputError);
  CHECK_THROWS_AS(Kernel::gaussian(-1.0), InvalidInputError);
  CHECK_THROWS_AS(Kernel::polynomial(0, 1.0), InvalidInputError);
}

TEST_CASE("gram matrices are symmetric, PSD and bounded by kappa^2") {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 30; ++t) {
    const auto m = static_cast<std::size_t>(oracle::uniform_int(rng, 1, 25));
    const auto d = static_cast<std::size_t>(oracle::uniform_int(rng, 1, 4));
    const double radius = 1.5;
    std::vector<FeatureVector> pts(m, FeatureVector(d));
    for (auto& p : pts) {
      double n2 = 0.0;
      for (auto& v : p) {
        v = oracle::uniform(rng, -1, 1);
        n2 += v * v;
      }
      // Scale into the declared ball.
      const double scale = radius * oracle::uniform(rng, 0, 1) / std::sqrt(std::max(n2, 1e-300));
      for (auto& v : p) v *= scale;
    }
    for (const auto& k : {Kernel::gaussian(oracle::uniform(rng, 0.1, 3)), Kernel::linear(), Kernel::polynomial(3, 0.7)}) {
      const auto g = gram(k, pts);
      const double kap = kappa(k, radius);
      for (std::size_t i = 0; i < m; ++i) {
        CHECK(g(i, i) <= kap * kap * (1 + 1e-12));
        for (std::size_t j = 0; j < m; ++j) CHECK(g(i, j) == g(j, i));
      }
      CHECK(oracle::min_eigenvalue(g.matrix()) >= -1e-8 * std::max(1.0, kap * kap * static_cast<double>(m)));
      if (k.kind == KernelKind::kGaussian)
        for (double v : g.matrix().data()) CHECK((v > 0.0 && v <= 1.0));
    }
  }
}
