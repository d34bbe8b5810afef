#pragma once

// Synthetic class-conditional gaussian models D_{X|y} and samplers.

#include <cstdint>
#include <span>
#include <vector>

#include "confstab/dataset.hpp"

namespace confstab {

// One axis-aligned gaussian per class. A zero standard deviation gives a
// point mass on that coordinate.
struct ClassConditionalModel {
  int q = 0;
  std::vector<FeatureVector> means;
  std::vector<FeatureVector> stddevs;
  PriorVector priors = PriorVector::uniform(2);

  std::size_t dimension() const { return means.empty() ? 0 : means.front().size(); }
  void validate() const;
};

// Q isotropic gaussians centered on the vertices of a regular simplex in
// R^{Q-1}, pairwise center distance `separation`, common stddev `sigma`.
ClassConditionalModel simplex_model(int q, double separation, double sigma);
ClassConditionalModel simplex_model(int q, double separation, double sigma, PriorVector priors);

// X_i ~ D_{X|y_i} independently; bit-identical for identical inputs.
std::vector<FeatureVector> sample_conditional(const ClassConditionalModel& model,
                                              std::span<const int> labels, std::uint64_t seed);

// Labels from the priors, then features from the conditionals.
Dataset sample_joint(const ClassConditionalModel& model, std::size_t m, std::uint64_t seed);

// Largest Euclidean norm among the points (for declaring kernel domain radii).
double max_norm(std::span<const FeatureVector> points);

}  // namespace confstab
