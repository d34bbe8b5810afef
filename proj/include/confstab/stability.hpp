#pragma once

// Empirical confusion stability: how much the loss matrix at (x, y_i) moves
// when training point i is removed or replaced, against the cap B / m_{y_i}.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "confstab/dataset.hpp"
#include "confstab/learners.hpp"
#include "confstab/loss.hpp"

namespace confstab {

// A learning algorithm with fixed hyperparameters, plus the loss family its
// loss matrices are measured with.
struct Trainer {
  Algorithm algorithm = Algorithm::kLlw;
  Kernel kernel = Kernel::gaussian(1.0);
  TrainConfig config;

  TrainResult operator()(const Dataset& data) const { return train(algorithm, data, kernel, config); }
  LossFamily loss_family(int q) const;
};

enum class StabilityModel { kGenericRkhs, kLlw, kWw };

// generic: max_q sigma_q^2 * Q kappa^2 / (2 lambda); LLW: Q kappa^2 / (2 lambda);
// WW: Q^2 kappa^2 / (4 lambda). lambda = +inf gives 0.
// Throws UnboundedKernelError for non-finite kappa, InvalidInputError for
// lambda <= 0 or a generic family with infinite sigma.
double theoretical_B(const LossFamily& family, double kappa, double lambda, StabilityModel model, int q);

enum class PerturbationMode { kRemoveOne, kReplaceOne };

// max over probes x of |L(A_z, x, y_i) - L(A_z', x, y_i)| (operator norm),
// with z' = z without i or z with x_i replaced by `replacement`.
// Throws PreconditionError if m_{y_i} < 2, InvalidInputError on an empty
// probe set or a missing replacement.
double measure_perturbation(const Trainer& trainer, const Dataset& data, std::size_t index,
                            std::span<const FeatureVector> probes, PerturbationMode mode,
                            const FeatureVector& replacement = {});
// Same, reusing an already trained hypothesis on `data`.
double measure_perturbation(const Trainer& trainer, const Dataset& data, const KernelHypothesis& base,
                            std::size_t index, std::span<const FeatureVector> probes, PerturbationMode mode,
                            const FeatureVector& replacement = {}, bool* converged = nullptr);

struct StabilityRecord {
  std::size_t index = 0;
  int label = 0;
  std::size_t class_count = 0;  // m_{y_i} used in the cap
  double empirical = 0.0;
  double cap = 0.0;
  double ratio = 0.0;
  bool converged = true;  // perturbed training converged
};

struct StabilityReport {
  std::vector<StabilityRecord> records;  // in the order of the requested indices
  double b_theoretical = 0.0;
  std::size_t probe_size = 0;
  double max_ratio = 0.0;
  // Records with empirical > cap + slack.
  std::size_t violations = 0;
  bool base_converged = true;
};

inline constexpr double kStabilitySlack = 1e-3;

struct ScanOptions {
  PerturbationMode mode = PerturbationMode::kRemoveOne;
  // Replacement point for index i (replace-one only).
  std::function<FeatureVector(std::size_t index)> replacement;
  double slack = kStabilitySlack;
  int jobs = 1;
};

StabilityReport stability_scan(const Trainer& trainer, const Dataset& data, double b_theoretical,
                               std::span<const std::size_t> indices, std::span<const FeatureVector> probes,
                               const ScanOptions& options = {});

// Runs fn(k) for k in [0, count) on up to `jobs` threads. fn must only write
// to slot k of its outputs.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace confstab
