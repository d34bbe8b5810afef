#include "confstab/synth.hpp"

#include <cmath>
#include <random>
#include <string>

#include "confstab/error.hpp"
#include "confstab/random.hpp"

namespace confstab {

namespace {

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void draw_point(const ClassConditionalModel& model, int y, Rng& rng, std::normal_distribution<double>& normal,
                FeatureVector& out) {
  const auto& mu = model.means[static_cast<std::size_t>(y)];
  const auto& sd = model.stddevs[static_cast<std::size_t>(y)];
  out.resize(mu.size());
  for (std::size_t k = 0; k < mu.size(); ++k) out[k] = mu[k] + sd[k] * normal(rng);
}

}  // namespace

void ClassConditionalModel::validate() const {
  if (q < 2) throw InvalidInputError("model: need at least 2 classes");
  if (means.size() != static_cast<std::size_t>(q) || stddevs.size() != static_cast<std::size_t>(q)) {
    throw InvalidInputError("model: need one mean and one stddev vector per class");
  }
  if (priors.size() != static_cast<std::size_t>(q)) throw InvalidInputError("model: prior has wrong length");
  const std::size_t d = dimension();
  for (int c = 0; c < q; ++c) {
    const auto& mu = means[static_cast<std::size_t>(c)];
    const auto& sd = stddevs[static_cast<std::size_t>(c)];
    if (mu.size() != d || sd.size() != d) throw InvalidInputError("model: inconsistent dimensions");
    for (double s : sd) {
      if (!(s >= 0.0) || !std::isfinite(s)) {
        throw InvalidInputError("model: class " + std::to_string(c + 1) + " has a negative stddev");
      }
    }
  }
}

ClassConditionalModel simplex_model(int q, double separation, double sigma) {
  return simplex_model(q, separation, sigma, PriorVector::uniform(q));
}

ClassConditionalModel simplex_model(int q, double separation, double sigma, PriorVector priors) {
  if (q < 2) throw InvalidInputError("simplex_model: need at least 2 classes");
  if (!(separation >= 0.0)) throw InvalidInputError("simplex_model: separation must be >= 0");
  if (!(sigma >= 0.0)) throw InvalidInputError("simplex_model: sigma must be >= 0");
  const auto n = static_cast<std::size_t>(q);
  const std::size_t d = n - 1;
  // Vertex i has coordinates b_k[i] in the Helmert basis of the sum-zero
  // subspace of R^Q; adjacent vertices are sqrt(2) apart before scaling.
  const double scale = separation / std::sqrt(2.0);
  ClassConditionalModel model{q, {}, {}, std::move(priors)};
  model.means.assign(n, FeatureVector(d, 0.0));
  model.stddevs.assign(n, FeatureVector(d, sigma));
  for (std::size_t k = 1; k <= d; ++k) {
    const double norm = std::sqrt(static_cast<double>(k * (k + 1)));
    for (std::size_t i = 0; i < k; ++i) model.means[i][k - 1] = scale / norm;
    model.means[k][k - 1] = -scale * static_cast<double>(k) / norm;
  }
  model.validate();
  return model;
}

std::vector<FeatureVector> sample_conditional(const ClassConditionalModel& model, std::span<const int> labels,
                                              std::uint64_t seed) {
  model.validate();
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<FeatureVector> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= model.q) {
      throw IndexError("sample_conditional: label " + std::to_string(labels[i] + 1) + " out of range");
    }
    draw_point(model, labels[i], rng, normal, out[i]);
  }
  return out;
}

Dataset sample_joint(const ClassConditionalModel& model, std::size_t m, std::uint64_t seed) {
  model.validate();
  if (m == 0) throw InvalidInputError("sample_joint: m must be >= 1");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset data{model.q, std::vector<FeatureVector>(m), std::vector<int>(m)};
  const auto& pi = model.priors.values();
  for (std::size_t i = 0; i < m; ++i) {
    const double u = uniform01(rng);
    double cum = 0.0;
    int y = model.q - 1;
    for (int c = 0; c < model.q; ++c) {
      cum += pi[static_cast<std::size_t>(c)];
      if (u < cum) {
        y = c;
        break;
      }
    }
    // Zero-prior classes are never chosen, even at the rounding edge.
    while (pi[static_cast<std::size_t>(y)] == 0.0 && y > 0) --y;
    data.labels[i] = y;
    draw_point(model, y, rng, normal, data.points[i]);
  }
  return data;
}

double max_norm(std::span<const FeatureVector> points) {
  double best = 0.0;
  for (const auto& p : points) {
    double s = 0.0;
    for (double x : p) s += x * x;
    best = std::max(best, std::sqrt(s));
  }
  return best;
}

}  // namespace confstab
