#pragma once

// Closed-form bounds: the prior-free risk cap, the confusion-norm
// concentration bound for stable algorithms and its LLW / WW instances, and
// the matrix bounded-differences tail.

#include <cstddef>
#include <vector>

#include "confstab/dataset.hpp"
#include "confstab/matrix.hpp"

namespace confstab {

struct BoundInputs {
  int q = 2;
  std::vector<std::size_t> class_counts;  // m_q, every entry >= 2
  double B = 0.0;                         // stability constant
  double M = 0.0;                         // loss range bound
  double delta = 0.1;

  // Throws InvalidInputError.
  void validate() const;
  std::size_t m_star() const;
};

// 2B sum_q 1/m_q + Q sqrt(8 ln(Q^2/delta)) (4 sqrt(m*) B/m* + M sqrt(Q/m*)).
// strict_proof_constant uses ln(2Q^2/delta), the constant the union bound in
// the proof actually delivers.
double confusion_bound(const BoundInputs& in, bool strict_proof_constant = false);

// Specialized bounds, written out in closed form rather than through
// confusion_bound. Throw InvalidInputError for lambda <= 0 or kappa < 0.
double llw_bound(int q, double kappa, double lambda, const std::vector<std::size_t>& class_counts, double delta,
                 bool strict_proof_constant = false);
double ww_bound(int q, double kappa, double lambda, const std::vector<std::size_t>& class_counts, double delta,
                bool strict_proof_constant = false);

// Loss range constants of the two machines: LLW Q kappa / sqrt(lambda) + 1,
// WW Q (1 + kappa sqrt(Q / lambda)).
double llw_range_bound(int q, double kappa, double lambda);
double ww_range_bound(int q, double kappa, double lambda);

struct RiskCap {
  double risk = 0.0;  // |pi^T C|_1
  double cap = 0.0;   // sqrt(Q) |C|
};

// Throws InvalidInputError on a dimension mismatch.
RiskCap risk_from_confusion(const ConfusionMatrix& c, const PriorVector& pi);

// min(1, 2Q exp(-t^2 / (8 sigma_sq))). q is the source dimension (the
// dilation has size 2Q). Throws InvalidInputError for sigma_sq <= 0 or t < 0.
double mcdiarmid_tail(int q, double sigma_sq, double t);

// Smallest t with mcdiarmid_tail(q, sigma_sq, t) <= p, for p in (0, 1].
double mcdiarmid_quantile(int q, double sigma_sq, double p);

}  // namespace confstab
