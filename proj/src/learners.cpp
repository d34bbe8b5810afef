#include "confstab/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "confstab/error.hpp"

namespace confstab {

const char* algorithm_key(Algorithm a) { return a == Algorithm::kLlw ? "llw" : "ww"; }

Algorithm algorithm_from_key(std::string_view key) {
  if (key == "llw") return Algorithm::kLlw;
  if (key == "ww") return Algorithm::kWw;
  throw InvalidInputError("unknown algorithm '" + std::string(key) + "' (expected llw or ww)");
}

// ---------------------------------------------------------------------------
// KernelHypothesis
// ---------------------------------------------------------------------------

KernelHypothesis::KernelHypothesis(Kernel kernel, Matrix alpha, std::vector<FeatureVector> train_points)
    : kernel_(kernel), alpha_(std::move(alpha)), train_points_(std::move(train_points)) {
  if (alpha_.cols() != train_points_.size()) {
    throw InvalidInputError("hypothesis: alpha has " + std::to_string(alpha_.cols()) + " columns but there are " +
                            std::to_string(train_points_.size()) + " training points");
  }
  if (alpha_.rows() < 1) throw InvalidInputError("hypothesis: alpha has no rows");
  if (!alpha_.all_finite()) throw InvalidInputError("hypothesis: alpha has non-finite entries");
  dimension_ = common_dimension(train_points_);
  for (std::size_t i = 0; i < alpha_.cols(); ++i) {
    for (std::size_t q = 0; q < alpha_.rows(); ++q) {
      if (alpha_(q, i) != 0.0) {
        support_.push_back(i);
        break;
      }
    }
  }
}

void KernelHypothesis::predict_into(std::span<const double> x, std::span<double> out) const {
  if (x.size() != dimension_ && !train_points_.empty()) {
    throw InvalidInputError("predict: point has dimension " + std::to_string(x.size()) + ", expected " +
                            std::to_string(dimension_));
  }
  if (out.size() != alpha_.rows()) throw InvalidInputError("predict: output has wrong size");
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i : support_) {
    const double k = kernel_(train_points_[i], x);
    for (std::size_t q = 0; q < alpha_.rows(); ++q) out[q] += alpha_(q, i) * k;
  }
}

std::vector<double> KernelHypothesis::predict(std::span<const double> x) const {
  std::vector<double> out(alpha_.rows());
  predict_into(x, out);
  return out;
}

double KernelHypothesis::constraint_residual() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < alpha_.cols(); ++i) {
    double s = 0.0;
    for (std::size_t q = 0; q < alpha_.rows(); ++q) s += alpha_(q, i);
    worst = std::max(worst, std::abs(s));
  }
  return worst;
}

std::vector<double> predict(const KernelHypothesis& h, std::span<const double> x) { return h.predict(x); }

RkhsNorms rkhs_norms(const KernelHypothesis& h) {
  const auto g = gram(h.kernel(), h.train_points());
  const Matrix f = matmul(h.alpha(), g.matrix());  // row q holds G alpha_q
  const auto q = static_cast<std::size_t>(h.q_count());
  const std::size_t m = h.point_count();
  Matrix inner(q, q);
  for (std::size_t a = 0; a < q; ++a)
    for (std::size_t b = 0; b < q; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += h.alpha()(a, i) * f(b, i);
      inner(a, b) = s;
    }
  RkhsNorms out{std::vector<double>(q), Matrix(q, q)};
  for (std::size_t a = 0; a < q; ++a) out.squared[a] = inner(a, a);
  // Pairwise norms from the difference coefficients directly, not from the
  // expansion |a|^2 + |b|^2 - 2<a,b>, to avoid cancellation.
  for (std::size_t a = 0; a < q; ++a)
    for (std::size_t b = a + 1; b < q; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += (h.alpha()(a, i) - h.alpha()(b, i)) * (f(a, i) - f(b, i));
      out.pairwise_squared(a, b) = out.pairwise_squared(b, a) = s;
    }
  return out;
}

void TrainConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidInputError("lambda must be finite and > 0");
  if (!(tolerance > 0.0)) throw InvalidInputError("tolerance must be > 0");
  if (!(kink_tolerance > 0.0)) throw InvalidInputError("kink_tolerance must be > 0");
  if (max_iters < 1) throw InvalidInputError("max_iters must be >= 1");
  if (!(step_scale > 0.0)) throw InvalidInputError("step_scale must be > 0");
}

// ---------------------------------------------------------------------------
// TrainingObjective
// ---------------------------------------------------------------------------

TrainingObjective::TrainingObjective(Algorithm algorithm, const Dataset& data, const Kernel& kernel, double lambda)
    : algorithm_(algorithm), q_(data.q), lambda_(lambda), labels_(data.labels), gram_(Matrix()) {
  data.validate();
  if (!(lambda > 0.0)) throw InvalidInputError("lambda must be > 0");
  const auto stats = label_counts(data.labels, data.q);
  for (std::size_t c = 0; c < stats.counts.size(); ++c) {
    if (stats.counts[c] == 0) {
      throw DegenerateClassError("class " + std::to_string(c + 1) + " of " + std::to_string(q_) +
                                 " has no training samples");
    }
  }
  weights_.resize(labels_.size());
  for (std::size_t n = 0; n < labels_.size(); ++n)
    weights_[n] = 1.0 / static_cast<double>(stats.counts[static_cast<std::size_t>(labels_[n])]);

  const double llw_shift = 1.0 / static_cast<double>(q_ - 1);
  for (std::size_t n = 0; n < labels_.size(); ++n) {
    for (int p = 0; p < q_; ++p) {
      if (p == labels_[n]) continue;
      if (algorithm_ == Algorithm::kLlw) {
        terms_.push_back({n, p, -1, llw_shift});
      } else {
        terms_.push_back({n, p, labels_[n], 1.0});
      }
    }
  }
  gram_ = confstab::gram(kernel, data.points);
}

double TrainingObjective::centered_regularization() const noexcept {
  return algorithm_ == Algorithm::kLlw ? lambda_ : lambda_ * q_;
}

void TrainingObjective::check_alpha(const Matrix& alpha) const {
  if (alpha.rows() != static_cast<std::size_t>(q_) || alpha.cols() != labels_.size()) {
    throw InvalidInputError("alpha must be " + std::to_string(q_) + " x " + std::to_string(labels_.size()));
  }
}

Matrix TrainingObjective::scores(const Matrix& alpha) const {
  check_alpha(alpha);
  return matmul(alpha, gram_.matrix());
}

namespace {

double hinge_margin(const TrainingObjective::HingeTerm& t, const Matrix& f) {
  double z = t.offset + f(static_cast<std::size_t>(t.plus), t.sample);
  if (t.minus >= 0) z -= f(static_cast<std::size_t>(t.minus), t.sample);
  return z;
}

double loss_from_scores(const TrainingObjective& obj, const Matrix& f) {
  double s = 0.0;
  const auto& w = obj.sample_weights();
  for (const auto& t : obj.terms()) {
    const double z = hinge_margin(t, f);
    if (z > 0.0) s += w[t.sample] * z;
  }
  return s;
}

double regularizer_from_scores(Algorithm algorithm, const Matrix& alpha, const Matrix& f) {
  const std::size_t q = alpha.rows();
  const std::size_t m = alpha.cols();
  double s = 0.0;
  if (algorithm == Algorithm::kLlw) {
    for (std::size_t a = 0; a < q; ++a)
      for (std::size_t i = 0; i < m; ++i) s += alpha(a, i) * f(a, i);
  } else {
    for (std::size_t a = 0; a < q; ++a)
      for (std::size_t b = a + 1; b < q; ++b)
        for (std::size_t i = 0; i < m; ++i) s += (alpha(a, i) - alpha(b, i)) * (f(a, i) - f(b, i));
  }
  return s;
}

double value_from_scores(const TrainingObjective& obj, const Matrix& alpha, const Matrix& f) {
  return loss_from_scores(obj, f) + obj.lambda() * regularizer_from_scores(obj.algorithm(), alpha, f);
}

}  // namespace

double TrainingObjective::empirical_loss(const Matrix& alpha) const { return loss_from_scores(*this, scores(alpha)); }

double TrainingObjective::value(const Matrix& alpha) const {
  const Matrix f = scores(alpha);
  return value_from_scores(*this, alpha, f);
}

double TrainingObjective::value_at_zero() const {
  double s = 0.0;
  for (const auto& t : terms_) s += weights_[t.sample] * std::max(t.offset, 0.0);
  return s;
}

SubgradientResidual TrainingObjective::subgradient_residual(const Matrix& alpha, double kink_tolerance,
                                                            std::span<const double> hint) const {
  if (!hint.empty() && hint.size() != terms_.size()) {
    throw InvalidInputError("subgradient_residual: hint has " + std::to_string(hint.size()) +
                            " entries, expected " + std::to_string(terms_.size()));
  }
  const Matrix f = scores(alpha);
  const auto q = static_cast<std::size_t>(q_);
  const std::size_t m = labels_.size();
  const Matrix& g = gram_.matrix();
  const double inv_q = 1.0 / static_cast<double>(q_);

  // Multipliers: forced outside the kink band, free inside.
  std::vector<double> mult(terms_.size());
  std::vector<std::size_t> free_terms;
  for (std::size_t t = 0; t < terms_.size(); ++t) {
    const double z = hinge_margin(terms_[t], f);
    if (z > kink_tolerance) {
      mult[t] = 1.0;
    } else if (z < -kink_tolerance) {
      mult[t] = 0.0;
    } else {
      const double start = hint.empty() ? 0.5 + 0.5 * z / kink_tolerance : hint[t];
      mult[t] = std::clamp(start, 0.0, 1.0);
      free_terms.push_back(t);
    }
  }

  // V_q = Gamma_q + grad of the regularizer in coefficient space, then U = V
  // projected onto sum_q u_q = 0.
  Matrix u(q, m);
  for (std::size_t t = 0; t < terms_.size(); ++t) {
    const auto& term = terms_[t];
    const double c = mult[t] * weights_[term.sample];
    u(static_cast<std::size_t>(term.plus), term.sample) += c;
    if (term.minus >= 0) u(static_cast<std::size_t>(term.minus), term.sample) -= c;
  }
  for (std::size_t i = 0; i < m; ++i) {
    double col = 0.0;
    for (std::size_t a = 0; a < q; ++a) col += alpha(a, i);
    for (std::size_t a = 0; a < q; ++a) {
      const double reg = algorithm_ == Algorithm::kLlw ? alpha(a, i) : q * alpha(a, i) - col;
      u(a, i) += 2.0 * lambda_ * reg;
    }
    double mean = 0.0;
    for (std::size_t a = 0; a < q; ++a) mean += u(a, i);
    mean *= inv_q;
    for (std::size_t a = 0; a < q; ++a) u(a, i) -= mean;
  }

  Matrix gu = matmul(u, g);  // row a holds G u_a

  // Projected direction of a term's multiplier in class space.
  std::vector<double> dir(q);
  auto direction = [&](const HingeTerm& term) {
    std::fill(dir.begin(), dir.end(), 0.0);
    dir[static_cast<std::size_t>(term.plus)] += 1.0;
    if (term.minus >= 0) dir[static_cast<std::size_t>(term.minus)] -= 1.0;
    double mean = 0.0;
    for (double d : dir) mean += d;
    mean *= inv_q;
    double norm2 = 0.0;
    for (double& d : dir) {
      d -= mean;
      norm2 += d * d;
    }
    return norm2;
  };

  // Coordinate descent on |U|_G^2 over the free multipliers.
  for (int sweep = 0; sweep < 50 && !free_terms.empty(); ++sweep) {
    double largest_step = 0.0;
    for (std::size_t t : free_terms) {
      const auto& term = terms_[t];
      const std::size_t n = term.sample;
      const double w = weights_[n];
      const double norm2 = direction(term);
      const double curv = w * w * g(n, n) * norm2;
      if (curv <= 0.0) continue;
      double grad = 0.0;
      for (std::size_t a = 0; a < q; ++a) grad += dir[a] * gu(a, n);
      grad *= w;
      const double next = std::clamp(mult[t] - grad / curv, 0.0, 1.0);
      const double delta = next - mult[t];
      if (delta == 0.0) continue;
      mult[t] = next;
      largest_step = std::max(largest_step, std::abs(delta));
      for (std::size_t a = 0; a < q; ++a) {
        const double c = delta * w * dir[a];
        if (c == 0.0) continue;
        u(a, n) += c;
        auto gu_row = gu.row(a);
        for (std::size_t i = 0; i < m; ++i) gu_row[i] += c * g(i, n);
      }
    }
    if (largest_step < 1e-14) break;
  }

  gu = matmul(u, g);
  double norm2 = 0.0;
  for (std::size_t a = 0; a < q; ++a)
    for (std::size_t i = 0; i < m; ++i) norm2 += u(a, i) * gu(a, i);
  double h2 = 0.0;
  for (std::size_t a = 0; a < q; ++a)
    for (std::size_t i = 0; i < m; ++i) h2 += alpha(a, i) * f(a, i);

  SubgradientResidual r;
  r.absolute = std::sqrt(std::max(norm2, 0.0));
  r.relative = r.absolute / (1.0 + std::sqrt(std::max(h2, 0.0)));
  return r;
}

}  // namespace confstab
