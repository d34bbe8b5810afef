#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "confstab/error.hpp"
#include "confstab/learners.hpp"
#include "confstab/loss.hpp"
#include "confstab/synth.hpp"
#include "oracles.hpp"

using namespace confstab;

namespace {

Dataset balanced(int q, std::size_t per_class, double separation, std::uint64_t seed, double sigma = 1.0) {
  const auto model = simplex_model(q, separation, sigma);
  auto labels = labels_from_counts(std::vector<std::size_t>(static_cast<std::size_t>(q), per_class));
  return Dataset{q, sample_conditional(model, labels, seed), labels};
}

TrainConfig with_lambda(double lambda) {
  TrainConfig c;
  c.lambda = lambda;
  return c;
}

Matrix centered_random(std::mt19937_64& rng, std::size_t q, std::size_t m, double scale) {
  Matrix a = oracle::random_matrix(rng, q, m, scale);
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t r = 0; r < q; ++r) s += a(r, i);
    for (std::size_t r = 0; r < q; ++r) a(r, i) -= s / static_cast<double>(q);
  }
  return a;
}

}  // namespace

TEST_CASE("predict examples") {
  const std::vector<FeatureVector> pts{{1, 0}, {0, 1}};
  KernelHypothesis zero(Kernel::gaussian(1.0), Matrix(3, 2), pts);
  CHECK(zero.predict(FeatureVector{0.2, 0.4}) == std::vector<double>{0, 0, 0});

  Matrix a(2, 1);
  a(0, 0) = 1.5;
  a(1, 0) = -0.25;
  KernelHypothesis single(Kernel::gaussian(3.0), a, {{0.7, -0.1}});
  const auto s = single.predict(FeatureVector{0.7, -0.1});
  CHECK(s[0] == doctest::Approx(1.5));
  CHECK(s[1] == doctest::Approx(-0.25));

  Matrix lin(2, 2);
  lin(0, 0) = 1;
  lin(0, 1) = -1;
  KernelHypothesis h(Kernel::linear(), lin, pts);
  CHECK(predict(h, FeatureVector{1, 0})[0] == doctest::Approx(1.0));
  CHECK_THROWS_AS(h.predict(FeatureVector{1, 0, 0}), InvalidInputError);
}

TEST_CASE("rkhs norms") {
  KernelHypothesis zero(Kernel::gaussian(1.0), Matrix(2, 3), {{0.0}, {1.0}, {2.0}});
  for (double v : rkhs_norms(zero).squared) CHECK(v == 0.0);

  Matrix a(2, 1);
  a(0, 0) = 2.0;
  KernelHypothesis one(Kernel::gaussian(1.0), a, {{4.0}});
  CHECK(rkhs_norms(one).squared[0] == doctest::Approx(4.0));

  std::mt19937_64 rng(43);
  for (int t = 0; t < 20; ++t) {
    const auto q = static_cast<std::size_t>(oracle::uniform_int(rng, 2, 4));
    const auto m = static_cast<std::size_t>(oracle::uniform_int(rng, 1, 8));
    std::vector<FeatureVector> pts(m, FeatureVector(2));
    for (auto& p : pts)
      for (auto& v : p) v = oracle::uniform(rng, -2, 2);
    KernelHypothesis h(Kernel::gaussian(0.7), oracle::random_matrix(rng, q, m), pts);
    const auto n = rkhs_norms(h);
    auto inner = [&](std::size_t p, std::size_t r) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) s += h.alpha()(p, i) * h.alpha()(r, j) * h.kernel()(pts[i], pts[j]);
      return s;
    };
    for (std::size_t p = 0; p < q; ++p) {
      CHECK(n.squared[p] == doctest::Approx(inner(p, p)).epsilon(1e-10));
      for (std::size_t r = 0; r < q; ++r)
        CHECK(n.pairwise_squared(p, r) == doctest::Approx(inner(p, p) + inner(r, r) - 2 * inner(p, r)).epsilon(1e-9));
    }
  }
}

TEST_CASE("objective at zero") {
  for (int q : {2, 3, 5}) {
    const auto d = balanced(q, 1, 2.0, 1);
    CHECK(TrainingObjective(Algorithm::kLlw, d, Kernel::gaussian(1.0), 0.3).value_at_zero() == doctest::Approx(q));
    CHECK(TrainingObjective(Algorithm::kWw, d, Kernel::gaussian(1.0), 0.3).value_at_zero() ==
          doctest::Approx(q * (q - 1)));
  }
  // Imbalanced data: class normalization keeps J(0) = Q.
  Dataset d{2, {{0.0}, {1.0}, {2.0}, {3.0}}, {0, 0, 0, 1}};
  CHECK(TrainingObjective(Algorithm::kLlw, d, Kernel::gaussian(1.0), 1.0).value_at_zero() == doctest::Approx(2.0));
}

TEST_CASE("objective value agrees with the definition") {
  std::mt19937_64 rng(47);
  for (auto alg : {Algorithm::kLlw, Algorithm::kWw}) {
    const auto d = balanced(3, 6, 2.0, 3);
    const Kernel k = Kernel::gaussian(0.5);
    TrainingObjective obj(alg, d, k, 0.2);
    for (int t = 0; t < 5; ++t) {
      const Matrix a = centered_random(rng, 3, d.size(), 0.5);
      const KernelHypothesis h(k, a, d.points);
      CHECK(obj.value(a) == doctest::Approx(oracle::objective(alg, h, d.points, d.labels, 0.2)).epsilon(1e-11));
    }
  }
}

TEST_CASE("training rejects empty classes and bad configs") {
  Dataset d{3, {{0.0}, {1.0}}, {0, 1}};
  CHECK_THROWS_AS(train_llw(d, Kernel::gaussian(1.0), with_lambda(1.0)), DegenerateClassError);
  const auto ok = balanced(2, 3, 2.0, 1);
  CHECK_THROWS_AS(train_ww(ok, Kernel::gaussian(1.0), with_lambda(0.0)), InvalidInputError);
  CHECK_THROWS_AS(train_ww(ok, Kernel::gaussian(1.0), with_lambda(-1.0)), InvalidInputError);
}

TEST_CASE("trained machines are optimal, feasible and consistent") {
  std::mt19937_64 rng(53);
  for (auto alg : {Algorithm::kLlw, Algorithm::kWw}) {
    for (int q : {2, 3, 4}) {
      for (double lambda : {0.01, 0.3, 5.0}) {
        CAPTURE(algorithm_key(alg));
        CAPTURE(q);
        CAPTURE(lambda);
        const auto d = balanced(q, 12, 1.5, 1000 + static_cast<std::uint64_t>(q));
        const Kernel k = Kernel::gaussian(0.5);
        const auto r = train(alg, d, k, with_lambda(lambda));
        CHECK(r.converged);
        CHECK(r.residual.relative <= 1e-6);
        CHECK(r.objective <= r.objective_at_zero + 1e-12);
        CHECK(r.constraint_residual <= 1e-8);
        CHECK(r.objective ==
              doctest::Approx(oracle::objective(alg, r.hypothesis, d.points, d.labels, lambda)).epsilon(1e-10));

        // Sum-to-zero on the training points.
        double worst = 0.0;
        for (const auto& x : d.points) {
          double s = 0.0;
          for (double v : r.hypothesis.predict(x)) s += v;
          worst = std::max(worst, std::abs(s));
        }
        CHECK(worst <= 1e-6);

        // Trace of best objectives never increases.
        for (std::size_t t = 1; t < r.trace.size(); ++t) CHECK(r.trace[t] <= r.trace[t - 1]);

        // No feasible random perturbation does better.
        TrainingObjective obj(alg, d, k, lambda);
        const Matrix& a = r.hypothesis.alpha();
        for (int t = 0; t < 20; ++t) {
          for (double eps : {1e-2, 1e-4}) {
            const Matrix trial = a + centered_random(rng, static_cast<std::size_t>(q), d.size(), eps);
            CHECK(obj.value(trial) >= r.objective - 1e-9);
          }
        }

        // Convexity witness on the midpoint.
        const Matrix other = centered_random(rng, static_cast<std::size_t>(q), d.size(), 1.0);
        Matrix mid = a;
        mid += other;
        mid *= 0.5;
        CHECK(obj.value(mid) <= 0.5 * r.objective + 0.5 * obj.value(other) + 1e-9);

        // |h_q(x)| <= kappa sqrt(J(h*) / lambda) on a probe set (kappa = 1).
        const double cap = std::sqrt(r.objective / lambda);
        const auto probes = balanced(q, 300, 1.5, 77).points;
        double largest = 0.0;
        for (const auto& x : probes)
          for (double v : r.hypothesis.predict(x)) largest = std::max(largest, std::abs(v));
        CHECK(largest <= cap + 1e-12);
      }
    }
  }
}

TEST_CASE("huge lambda drives the hypothesis to zero") {
  const auto d = balanced(3, 5, 2.0, 8);
  for (auto alg : {Algorithm::kLlw, Algorithm::kWw}) {
    const auto r = train(alg, d, Kernel::gaussian(1.0), with_lambda(1e6));
    for (double v : r.hypothesis.alpha().data()) CHECK(std::abs(v) <= 1e-5);
    if (alg == Algorithm::kWw) {
      const auto f = LossFamily::ww(3);
      for (const auto& x : d.points)
        CHECK(f.total(r.hypothesis.predict(x), 0) == doctest::Approx(2.0).epsilon(1e-4));
    }
  }
}

TEST_CASE("separable data gives zero training 0-1 confusion") {
  for (auto alg : {Algorithm::kLlw, Algorithm::kWw}) {
    const auto d = balanced(2, 30, 8.0, 21, 1.0);
    // Nearest-mean oracle confirms the sample is separable.
    const auto model = simplex_model(2, 8.0, 1.0);
    for (std::size_t i = 0; i < d.size(); ++i) {
      double d0 = 0.0, d1 = 0.0;
      for (std::size_t k = 0; k < d.points[i].size(); ++k) {
        d0 += std::pow(d.points[i][k] - model.means[0][k], 2);
        d1 += std::pow(d.points[i][k] - model.means[1][k], 2);
      }
      REQUIRE((d0 < d1) == (d.labels[i] == 0));
    }
    const auto r = train(alg, d, Kernel::gaussian(0.5), with_lambda(0.01));
    const auto f = LossFamily::zero_one(2);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(f.total(r.hypothesis.predict(d.points[i]), d.labels[i]) == 0.0);
  }
}

TEST_CASE("subgradient optimizer is a consistent but slower alternative") {
  const auto d = balanced(3, 10, 2.0, 31);
  for (auto alg : {Algorithm::kLlw, Algorithm::kWw}) {
    TrainConfig newton = with_lambda(0.5);
    TrainConfig sg = newton;
    sg.optimizer = Optimizer::kSubgradient;
    sg.max_iters = 4000;
    const auto a = train(alg, d, Kernel::gaussian(0.5), newton);
    const auto b = train(alg, d, Kernel::gaussian(0.5), sg);
    CHECK(b.objective >= a.objective - 1e-9);
    CHECK(b.objective <= a.objective * 1.02);
    CHECK(b.constraint_residual <= 1e-8);
    for (std::size_t t = 1; t < b.trace.size(); ++t) CHECK(b.trace[t] <= b.trace[t - 1]);
  }
}

TEST_CASE("training is deterministic") {
  const auto d = balanced(3, 8, 2.0, 5);
  const auto a = train_llw(d, Kernel::gaussian(0.5), with_lambda(0.1));
  const auto b = train_llw(d, Kernel::gaussian(0.5), with_lambda(0.1));
  CHECK(a.hypothesis.alpha() == b.hypothesis.alpha());
}

TEST_CASE("residual detects a non-optimal point") {
  const auto d = balanced(2, 10, 2.0, 6);
  TrainingObjective obj(Algorithm::kLlw, d, Kernel::gaussian(0.5), 0.1);
  const auto r = obj.subgradient_residual(Matrix(2, d.size()), 1e-6);
  CHECK(r.relative > 1e-2);
}

TEST_CASE("low-rank kernels with large feature norms still certify") {
  // Quadratic kernel on the plane: rank-6 Gram, scores in the hundreds.
  const auto data = balanced(3, 40, 3.0, 16);
  for (auto alg : {Algorithm::kLlw, Algorithm::kWw}) {
    const auto r = train(alg, data, Kernel::polynomial(2, 1.0), with_lambda(0.022));
    CHECK(r.converged);
    CHECK(r.residual.relative <= 1e-6);
    CHECK(r.objective <= r.objective_at_zero);
    CHECK(r.hypothesis.constraint_residual() <= 1e-9);
  }
}
