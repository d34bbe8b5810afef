#pragma once

// Regularized kernel multiclass SVMs in representer form.
//
// Both machines minimize the class-normalized objective
//
//   J(h) = sum_q (1/m_q) sum_{n : y_n = q} loss(h(x_n), q) + lambda * Reg(h)
//
//   LLW: loss = sum_{p != y} (h_p(x) + 1/(Q-1))_+,  Reg = sum_q |h_q|^2,
//        subject to sum_q h_q = 0
//   WW:  loss = sum_{p != y} (1 - h_y(x) + h_p(x))_+, Reg = sum_{p<q} |h_p - h_q|^2
//
// with h_q(x) = sum_i alpha[q][i] k(x_i, x). WW is invariant under adding a
// common function to every h_q; the trainers return the representative with
// sum_q h_q = 0, so both machines produce alpha with zero column sums.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "confstab/dataset.hpp"
#include "confstab/kernel.hpp"
#include "confstab/matrix.hpp"

namespace confstab {

enum class Algorithm { kLlw, kWw };

const char* algorithm_key(Algorithm a);
Algorithm algorithm_from_key(std::string_view key);

class KernelHypothesis {
 public:
  // alpha is Q x m; train_points has m entries of a common dimension.
  KernelHypothesis(Kernel kernel, Matrix alpha, std::vector<FeatureVector> train_points);

  int q_count() const noexcept { return static_cast<int>(alpha_.rows()); }
  std::size_t point_count() const noexcept { return train_points_.size(); }
  std::size_t dimension() const noexcept { return dimension_; }
  const Kernel& kernel() const noexcept { return kernel_; }
  const Matrix& alpha() const noexcept { return alpha_; }
  const std::vector<FeatureVector>& train_points() const noexcept { return train_points_; }

  // (h_1(x), ..., h_Q(x)). Throws InvalidInputError on a dimension mismatch.
  std::vector<double> predict(std::span<const double> x) const;
  void predict_into(std::span<const double> x, std::span<double> out) const;

  // Largest |alpha| column sum, i.e. the sum-to-zero residual in coefficients.
  double constraint_residual() const;

 private:
  Kernel kernel_;
  Matrix alpha_;
  std::vector<FeatureVector> train_points_;
  std::size_t dimension_ = 0;
  std::vector<std::size_t> support_;  // points with a nonzero alpha column
};

std::vector<double> predict(const KernelHypothesis& h, std::span<const double> x);

struct RkhsNorms {
  std::vector<double> squared;  // |h_q|_k^2
  Matrix pairwise_squared;      // |h_p - h_q|_k^2
};

RkhsNorms rkhs_norms(const KernelHypothesis& h);

enum class Optimizer {
  // Newton's method on a smoothed hinge, continuing the smoothing width down
  // to ~1e-8, in the eigenbasis of the training Gram matrix.
  kSmoothedNewton,
  // Projected subgradient descent on alpha, steps c / sqrt(t), Polyak averaging.
  kSubgradient,
};

struct TrainConfig {
  double lambda = 1.0;
  int max_iters = 20'000;
  // Subgradient step scale c in eta_t = c / (2 rho sqrt(t)).
  double step_scale = 1.0;
  // KKT acceptance (relative subgradient residual) for the Newton solver and
  // relative objective change over 50-iteration windows for subgradient descent.
  double tolerance = 1e-6;
  // Hinge terms within this distance of their kink get a free multiplier in
  // [0, 1] when the KKT residual is measured.
  double kink_tolerance = 1e-6;
  Optimizer optimizer = Optimizer::kSmoothedNewton;

  void validate() const;
};

struct SubgradientResidual {
  double absolute = 0.0;  // RKHS norm of the chosen projected subgradient
  double relative = 0.0;  // absolute / (1 + |h|_k)
};

// Exact (nonsmooth) training objective over a fixed training set.
class TrainingObjective {
 public:
  TrainingObjective(Algorithm algorithm, const Dataset& data, const Kernel& kernel, double lambda);

  Algorithm algorithm() const noexcept { return algorithm_; }
  int q_count() const noexcept { return q_; }
  std::size_t sample_count() const noexcept { return labels_.size(); }
  double lambda() const noexcept { return lambda_; }
  const GramMatrix& gram() const noexcept { return gram_; }
  const std::vector<double>& sample_weights() const noexcept { return weights_; }

  double value(const Matrix& alpha) const;
  double value_at_zero() const;
  // Data-fitting term only.
  double empirical_loss(const Matrix& alpha) const;

  // Norm of a projected subgradient at alpha, minimized over the free
  // multipliers of near-kink hinge terms; an upper bound on the norm of the
  // minimum-norm element. `hint` (one multiplier per hinge term, see
  // hinge_term_count) seeds the free multipliers.
  SubgradientResidual subgradient_residual(const Matrix& alpha, double kink_tolerance,
                                           std::span<const double> hint = {}) const;

  std::size_t hinge_term_count() const noexcept { return terms_.size(); }

  // One hinge (offset + F[plus][n] - F[minus][n])_+ weighted by 1/m_{y_n};
  // minus < 0 means no subtracted score.
  struct HingeTerm {
    std::size_t sample;
    int plus;
    int minus;
    double offset;
  };
  const std::vector<HingeTerm>& terms() const noexcept { return terms_; }

  // Regularization weight on the centered subspace: lambda for LLW,
  // lambda * Q for WW.
  double centered_regularization() const noexcept;

 private:
  Matrix scores(const Matrix& alpha) const;  // Q x m, F = alpha G
  void check_alpha(const Matrix& alpha) const;

  Algorithm algorithm_;
  int q_;
  double lambda_;
  std::vector<int> labels_;
  std::vector<double> weights_;
  GramMatrix gram_;
  std::vector<HingeTerm> terms_;
};

struct TrainResult {
  KernelHypothesis hypothesis;
  double objective = 0.0;
  double objective_at_zero = 0.0;
  double constraint_residual = 0.0;
  SubgradientResidual residual;
  bool converged = false;
  int iterations = 0;
  // Best objective seen after each outer iteration (non-increasing).
  std::vector<double> trace;
};

// Throws DegenerateClassError if some class in [0, Q) has no sample.
TrainResult train_llw(const Dataset& data, const Kernel& kernel, const TrainConfig& config);
TrainResult train_ww(const Dataset& data, const Kernel& kernel, const TrainConfig& config);
TrainResult train(Algorithm algorithm, const Dataset& data, const Kernel& kernel, const TrainConfig& config);

}  // namespace confstab
