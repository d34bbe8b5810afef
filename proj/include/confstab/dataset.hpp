#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "confstab/kernel.hpp"

namespace confstab {

// Labeled sample. Labels are 0-based class indices in [0, q).
struct Dataset {
  int q = 0;
  std::vector<FeatureVector> points;
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  // Throws InvalidInputError on size or label-range problems.
  void validate() const;
  // Copy without sample i.
  Dataset without(std::size_t i) const;
  // Copy with sample i's features replaced (label unchanged).
  Dataset with_replacement(std::size_t i, FeatureVector x) const;
};

// Class-count statistics of a label sequence.
//   counts[q]  number of labels equal to q (m_q)
//   support[q] 1 iff counts[q] > 0 (s(y))
//   m_star     min count over present classes
//   q_star     lowest-index class attaining m_star
struct LabelStats {
  std::vector<std::size_t> counts;
  std::vector<int> support;
  std::size_t m_star = 0;
  int q_star = -1;

  std::size_t present_classes() const;
};

LabelStats label_counts(std::span<const int> labels, int q);

// Class prior on the probability simplex (entries >= 0, sum 1 within 1e-12).
class PriorVector {
 public:
  explicit PriorVector(std::vector<double> pi);
  static PriorVector uniform(int q);
  static PriorVector empirical(std::span<const int> labels, int q);

  std::size_t size() const noexcept { return pi_.size(); }
  double operator[](std::size_t i) const { return pi_[i]; }
  const std::vector<double>& values() const noexcept { return pi_; }

 private:
  std::vector<double> pi_;
};

// Label sequence with the given per-class counts, classes in blocks.
std::vector<int> labels_from_counts(std::span<const std::size_t> counts);

}  // namespace confstab
