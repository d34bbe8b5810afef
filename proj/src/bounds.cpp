#include "confstab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "confstab/error.hpp"

namespace confstab {

void BoundInputs::validate() const {
  if (q < 2) throw InvalidInputError("Q must be at least 2");
  if (class_counts.size() != static_cast<std::size_t>(q))
    throw InvalidInputError("expected " + std::to_string(q) + " class counts, got " +
                            std::to_string(class_counts.size()));
  for (std::size_t k = 0; k < class_counts.size(); ++k)
    if (class_counts[k] < 2) throw InvalidInputError("class " + std::to_string(k + 1) + " has fewer than 2 samples");
  if (!(B >= 0.0) || !std::isfinite(B)) throw InvalidInputError("B must be finite and nonnegative");
  if (!(M >= 0.0) || !std::isfinite(M)) throw InvalidInputError("M must be finite and nonnegative");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInputError("delta must lie in (0, 1)");
}

std::size_t BoundInputs::m_star() const { return *std::min_element(class_counts.begin(), class_counts.end()); }

namespace {

double log_term(int q, double delta, bool strict) {
  const double qq = static_cast<double>(q) * q;
  return std::sqrt(8.0 * std::log((strict ? 2.0 * qq : qq) / delta));
}

double inverse_count_sum(const std::vector<std::size_t>& counts) {
  double s = 0.0;
  for (auto m : counts) s += 1.0 / static_cast<double>(m);
  return s;
}

void check_machine(int q, double kappa, double lambda, const std::vector<std::size_t>& counts, double delta) {
  if (!(lambda > 0.0)) throw InvalidInputError("lambda must be positive");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw InvalidInputError("kappa must be finite and nonnegative");
  BoundInputs{q, counts, 0.0, 0.0, delta}.validate();
}

}  // namespace

double confusion_bound(const BoundInputs& in, bool strict_proof_constant) {
  in.validate();
  const double m_star = static_cast<double>(in.m_star());
  const double beta_star = in.B / m_star;
  const double qd = in.q;
  return 2.0 * in.B * inverse_count_sum(in.class_counts) +
         qd * log_term(in.q, in.delta, strict_proof_constant) *
             (4.0 * std::sqrt(m_star) * beta_star + in.M * std::sqrt(qd / m_star));
}

double llw_bound(int q, double kappa, double lambda, const std::vector<std::size_t>& class_counts, double delta,
                 bool strict_proof_constant) {
  check_machine(q, kappa, lambda, class_counts, delta);
  const double qd = q;
  const double k2 = kappa * kappa;
  double first = 0.0;
  for (auto m : class_counts) first += qd * k2 / (lambda * static_cast<double>(m));
  const double m_star = static_cast<double>(*std::min_element(class_counts.begin(), class_counts.end()));
  const double inner = 2.0 * qd * qd * k2 / lambda + (qd * kappa / std::sqrt(lambda) + 1.0) * qd * std::sqrt(qd);
  return first + log_term(q, delta, strict_proof_constant) * inner / std::sqrt(m_star);
}

double ww_bound(int q, double kappa, double lambda, const std::vector<std::size_t>& class_counts, double delta,
                bool strict_proof_constant) {
  check_machine(q, kappa, lambda, class_counts, delta);
  const double qd = q;
  const double k2 = kappa * kappa;
  double first = 0.0;
  for (auto m : class_counts) first += qd * qd * k2 / (2.0 * lambda * static_cast<double>(m));
  const double m_star = static_cast<double>(*std::min_element(class_counts.begin(), class_counts.end()));
  const double inner = qd * qd * qd * k2 / lambda + qd * qd * (std::sqrt(qd) + kappa * qd / std::sqrt(lambda));
  return first + log_term(q, delta, strict_proof_constant) * inner / std::sqrt(m_star);
}

double llw_range_bound(int q, double kappa, double lambda) {
  if (!(lambda > 0.0)) throw InvalidInputError("lambda must be positive");
  return q * kappa / std::sqrt(lambda) + 1.0;
}

double ww_range_bound(int q, double kappa, double lambda) {
  if (!(lambda > 0.0)) throw InvalidInputError("lambda must be positive");
  return q * (1.0 + kappa * std::sqrt(q / lambda));
}

RiskCap risk_from_confusion(const ConfusionMatrix& c, const PriorVector& pi) {
  const std::size_t q = c.q_count();
  if (pi.size() != q)
    throw InvalidInputError("prior has " + std::to_string(pi.size()) + " entries, confusion matrix is " +
                            std::to_string(q) + "x" + std::to_string(q));
  RiskCap out;
  for (std::size_t j = 0; j < q; ++j) {
    double col = 0.0;
    for (std::size_t p = 0; p < q; ++p) col += pi[p] * c(p, j);
    out.risk += std::abs(col);
  }
  out.cap = std::sqrt(static_cast<double>(q)) * operator_norm(c.matrix());
  return out;
}

double mcdiarmid_tail(int q, double sigma_sq, double t) {
  if (!(sigma_sq > 0.0)) throw InvalidInputError("sigma^2 must be positive");
  if (!(t >= 0.0)) throw InvalidInputError("t must be nonnegative");
  return std::min(1.0, 2.0 * q * std::exp(-t * t / (8.0 * sigma_sq)));
}

double mcdiarmid_quantile(int q, double sigma_sq, double p) {
  if (!(sigma_sq > 0.0)) throw InvalidInputError("sigma^2 must be positive");
  if (!(p > 0.0 && p <= 1.0)) throw InvalidInputError("p must lie in (0, 1]");
  const double ratio = 2.0 * q / p;
  return ratio <= 1.0 ? 0.0 : std::sqrt(8.0 * sigma_sq * std::log(ratio));
}

}  // namespace confstab
