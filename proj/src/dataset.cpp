#include "confstab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "confstab/error.hpp"

namespace confstab {

void Dataset::validate() const {
  if (q < 2) throw InvalidInputError("dataset: need at least 2 classes, got " + std::to_string(q));
  if (points.size() != labels.size()) {
    throw InvalidInputError("dataset: " + std::to_string(points.size()) + " points but " +
                            std::to_string(labels.size()) + " labels");
  }
  common_dimension(points);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= q) {
      throw InvalidInputError("dataset: sample " + std::to_string(i + 1) + " has label " +
                              std::to_string(labels[i] + 1) + " outside [1, " + std::to_string(q) + "]");
    }
  }
}

Dataset Dataset::without(std::size_t i) const {
  if (i >= size()) throw IndexError("dataset: index " + std::to_string(i) + " out of range");
  Dataset out{q, points, labels};
  out.points.erase(out.points.begin() + static_cast<std::ptrdiff_t>(i));
  out.labels.erase(out.labels.begin() + static_cast<std::ptrdiff_t>(i));
  return out;
}

Dataset Dataset::with_replacement(std::size_t i, FeatureVector x) const {
  if (i >= size()) throw IndexError("dataset: index " + std::to_string(i) + " out of range");
  if (x.size() != points[i].size()) throw InvalidInputError("dataset: replacement has wrong dimension");
  Dataset out{q, points, labels};
  out.points[i] = std::move(x);
  return out;
}

std::size_t LabelStats::present_classes() const {
  return static_cast<std::size_t>(std::count(support.begin(), support.end(), 1));
}

LabelStats label_counts(std::span<const int> labels, int q) {
  if (q < 1) throw InvalidInputError("label_counts: class count must be >= 1");
  LabelStats s;
  s.counts.assign(static_cast<std::size_t>(q), 0);
  for (int y : labels) {
    if (y < 0 || y >= q) throw IndexError("label " + std::to_string(y + 1) + " outside [1, " + std::to_string(q) + "]");
    ++s.counts[static_cast<std::size_t>(y)];
  }
  s.support.resize(s.counts.size());
  for (std::size_t c = 0; c < s.counts.size(); ++c) {
    s.support[c] = s.counts[c] > 0 ? 1 : 0;
    if (s.counts[c] > 0 && (s.q_star < 0 || s.counts[c] < s.m_star)) {
      s.m_star = s.counts[c];
      s.q_star = static_cast<int>(c);
    }
  }
  return s;
}

PriorVector::PriorVector(std::vector<double> pi) : pi_(std::move(pi)) {
  if (pi_.empty()) throw InvalidInputError("prior vector is empty");
  double sum = 0.0;
  for (double p : pi_) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidInputError("prior entries must be finite and >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw InvalidInputError("prior entries sum to " + std::to_string(sum) + ", expected 1");
  }
}

PriorVector PriorVector::uniform(int q) {
  if (q < 1) throw InvalidInputError("uniform prior: class count must be >= 1");
  return PriorVector(std::vector<double>(static_cast<std::size_t>(q), 1.0 / q));
}

PriorVector PriorVector::empirical(std::span<const int> labels, int q) {
  if (labels.empty()) throw InvalidInputError("empirical prior: no labels");
  const auto stats = label_counts(labels, q);
  std::vector<double> pi(stats.counts.size());
  for (std::size_t c = 0; c < pi.size(); ++c)
    pi[c] = static_cast<double>(stats.counts[c]) / static_cast<double>(labels.size());
  // Renormalize so rounding never trips the simplex check.
  const double sum = std::accumulate(pi.begin(), pi.end(), 0.0);
  for (double& p : pi) p /= sum;
  return PriorVector(std::move(pi));
}

std::vector<int> labels_from_counts(std::span<const std::size_t> counts) {
  std::vector<int> labels;
  for (std::size_t c = 0; c < counts.size(); ++c) labels.insert(labels.end(), counts[c], static_cast<int>(c));
  return labels;
}

}  // namespace confstab
