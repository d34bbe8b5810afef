#pragma once

// Monte Carlo checks of the concentration results: the matrix
// bounded-differences tail for a user functional, and the deviation of the
// empirical confusion of a trained machine from its conditional expectation.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "confstab/bounds.hpp"
#include "confstab/learners.hpp"
#include "confstab/loss.hpp"
#include "confstab/random.hpp"
#include "confstab/stability.hpp"
#include "confstab/synth.hpp"

namespace confstab {

using Draw = std::vector<double>;

// H(z_1, ..., z_m) with independent z_i ~ draw(i, rng). H must return a
// symmetric matrix (dilate non-symmetric ones); caps[i] is the symmetric
// A_i with (H(..z_i..) - H(..z_i'..))^2 <= A_i^2.
struct McDiarmidProblem {
  std::size_t m = 0;
  std::function<Draw(std::size_t i, Rng& rng)> draw;
  std::function<Matrix(std::span<const Draw> z)> functional;
  std::vector<Matrix> caps;
  std::optional<Matrix> expected;  // E H if known
};

struct McDiarmidOptions {
  std::size_t trials = 10'000;
  // Samples for estimating E H when the problem does not supply it.
  std::size_t mean_samples = 20'000;
  std::size_t probe_count = 500;  // random pairs checked against the caps
  std::vector<double> t_grid;     // empty: automatic
  std::size_t grid_points = 20;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct TailRow {
  double t = 0.0;
  double empirical = 0.0;
  double theoretical = 0.0;
  double standard_error = 0.0;
  bool pass = true;
};

struct McDiarmidReport {
  double sigma_sq = 0.0;
  std::size_t dimension = 0;  // size of H
  std::size_t trials = 0;
  double max_deviation = 0.0;
  std::vector<TailRow> rows;
  bool pass = true;  // every row has empirical <= theoretical + 3 SE
};

// Throws InvalidCapsError if a probe violates the difference condition and
// InvalidInputError on malformed problems.
McDiarmidReport verify_mcdiarmid(const McDiarmidProblem& problem, const McDiarmidOptions& options);

// Largest value any loss component of `family` can take on h, using
// |h_q(x)| <= kappa |h_q|_k.
double certified_range_bound(const KernelHypothesis& h, const LossFamily& family, double kappa);

// H(X) = dilation of the empirical confusion of a fixed hypothesis with
// X_i ~ D_{X | labels[i]}, caps (sqrt(Q) M / m_{y_i}) I.
McDiarmidProblem fixed_hypothesis_problem(const KernelHypothesis& h, const LossFamily& family,
                                          const ClassConditionalModel& model, std::vector<int> labels, double range);

struct ConcentrationOptions {
  std::size_t trials = 200;
  double delta = 0.1;
  std::size_t holdout_per_class = 50'000;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool strict_proof_constant = false;
  std::optional<double> kappa;  // default: kappa of the trainer's kernel
};

struct TrialRecord {
  std::size_t trial = 0;
  double deviation = 0.0;         // |C_hat - C| with C from the held-out sample
  double estimation_slack = 0.0;  // 3 * sqrt(sum of squared standard errors of C)
  double max_loss = 0.0;          // largest loss component seen (training and held out)
  bool converged = true;
  double objective = 0.0;
};

struct ConcentrationReport {
  std::vector<TrialRecord> records;  // sorted by trial
  std::size_t excluded = 0;          // non-converged trials
  double quantile = 0.0;             // empirical (1 - delta) quantile over converged trials
  double estimation_slack = 0.0;     // largest per-trial slack
  double B = 0.0;
  double analytic_M = 0.0;
  double empirical_M = 0.0;
  double bound_analytic = 0.0;
  double bound_empirical = 0.0;
  bool pass_analytic = true;
  bool pass_empirical = true;
  bool pass() const { return pass_analytic && pass_empirical; }
};

// on_trial is called (serialized) after each newly computed trial; trials
// already present in `completed` are not recomputed.
ConcentrationReport concentration_experiment(const Trainer& trainer, const ClassConditionalModel& model,
                                             const std::vector<int>& labels, const ConcentrationOptions& options,
                                             const std::function<void(const TrialRecord&)>& on_trial = {},
                                             std::vector<TrialRecord> completed = {});

// (1 - delta) quantile: sorted[ceil((1 - delta) n) - 1].
double upper_quantile(std::vector<double> values, double delta);

}  // namespace confstab
