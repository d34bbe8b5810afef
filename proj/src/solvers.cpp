// Optimizers behind train_llw / train_ww.
//
// Smoothed Newton: with G = U diag(ev) U^T and L = U_r diag(sqrt(ev_r)) over
// the numerically nonzero eigenvalues, write h_q = sum_k beta_q[k] phi_k so
// that F_q = L beta_q and |h_q|_k = |beta_q|. On the centered subspace
// sum_q beta_q = 0 both machines become
//
//   f(beta) = sum_t w_t s_mu(z_t(F)) + rho sum_q |beta_q|^2
//
// (rho = lambda for LLW, lambda Q for WW) where s_mu is the hinge smoothed
// on [-mu/2, mu/2]. Newton's method with backtracking runs for a decreasing
// sequence of mu; the coefficients are recovered from stationarity,
// alpha_q = -(Gamma_q - mean_q Gamma) / (2 rho), Gamma = dLoss/dF.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "confstab/error.hpp"
#include "confstab/learners.hpp"

namespace confstab {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using HingeTerm = TrainingObjective::HingeTerm;

constexpr double kEigenCutoff = 1e-12;
constexpr double kMuStart = 1.0;
constexpr double kMuFinal = 1e-8;
constexpr double kMuFactor = 0.1;
constexpr int kMaxNewtonPerStage = 100;

double smooth_hinge(double z, double mu) {
  if (z <= -0.5 * mu) return 0.0;
  if (z >= 0.5 * mu) return z;
  const double s = z + 0.5 * mu;
  return s * s / (2.0 * mu);
}

double smooth_hinge_d1(double z, double mu) {
  if (z <= -0.5 * mu) return 0.0;
  if (z >= 0.5 * mu) return 1.0;
  return (z + 0.5 * mu) / mu;
}

double smooth_hinge_d2(double z, double mu) { return std::abs(z) < 0.5 * mu ? 1.0 / mu : 0.0; }

double margin(const HingeTerm& t, const MatrixXd& f) {
  double z = t.offset + f(t.plus, static_cast<Eigen::Index>(t.sample));
  if (t.minus >= 0) z -= f(t.minus, static_cast<Eigen::Index>(t.sample));
  return z;
}

class SmoothedNewton {
 public:
  SmoothedNewton(const TrainingObjective& obj, const TrainConfig& config) : obj_(obj), config_(config) {
    const auto& g = obj.gram().matrix();
    const auto m = static_cast<Eigen::Index>(g.rows());
    MatrixXd gm(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j) gm(i, j) = g(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(gm);
    const VectorXd& ev = es.eigenvalues();
    const double top = ev.size() > 0 ? ev.maxCoeff() : 0.0;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index k = 0; k < ev.size(); ++k)
      if (ev(k) > kEigenCutoff * top && ev(k) > 0.0) keep.push_back(k);
    l_.resize(m, static_cast<Eigen::Index>(keep.size()));
    inv_ev_.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c) {
      l_.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(keep[c]) * std::sqrt(ev(keep[c]));
      inv_ev_(static_cast<Eigen::Index>(c)) = 1.0 / ev(keep[c]);
    }
    q_ = obj.q_count();
    rho_ = obj.centered_regularization();
    beta_ = MatrixXd::Zero(q_, l_.cols());
  }

  TrainResult run(const Dataset& data, const Kernel& kernel) {
    int iterations = 0;
    bool budget_exhausted = false;
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> trace;

    for (double mu = kMuStart; mu >= kMuFinal * 0.999 && !budget_exhausted; mu *= kMuFactor) {
      for (int k = 0; k < kMaxNewtonPerStage; ++k) {
        if (iterations >= config_.max_iters) {
          budget_exhausted = true;
          break;
        }
        ++iterations;
        const bool moved = newton_step(mu);
        best = std::min(best, exact_objective());
        trace.push_back(best);
        if (!moved) break;
      }
    }
    last_mu_ = std::max(kMuFinal, last_mu_);

    // Recover alpha from stationarity at the final smoothing level.
    const MatrixXd f = beta_ * l_.transpose();
    const auto m = static_cast<std::size_t>(f.cols());
    const auto q = static_cast<std::size_t>(q_);
    std::vector<double> hint(obj_.terms().size());
    MatrixXd gamma = MatrixXd::Zero(q_, f.cols());
    const auto& w = obj_.sample_weights();
    for (std::size_t t = 0; t < obj_.terms().size(); ++t) {
      const auto& term = obj_.terms()[t];
      const double d1 = smooth_hinge_d1(margin(term, f), last_mu_);
      hint[t] = d1;
      const auto n = static_cast<Eigen::Index>(term.sample);
      gamma(term.plus, n) += w[term.sample] * d1;
      if (term.minus >= 0) gamma(term.minus, n) -= w[term.sample] * d1;
    }
    Matrix alpha(q, m);
    for (std::size_t i = 0; i < m; ++i) {
      const double mean = gamma.col(static_cast<Eigen::Index>(i)).mean();
      for (std::size_t a = 0; a < q; ++a)
        alpha(a, i) = -(gamma(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(i)) - mean) / (2.0 * rho_);
    }

    // Recovering alpha through the multipliers amplifies whatever is left of
    // the smoothed gradient by 1/(2 rho); with large feature norms that can
    // push kink terms past kink_tolerance. The direct representation of beta
    // keeps the scores exactly, so keep whichever certifies better.
    Matrix direct(q, m);
    const MatrixXd coeff = beta_ * inv_ev_.asDiagonal() * l_.transpose();
    for (std::size_t a = 0; a < q; ++a)
      for (std::size_t i = 0; i < m; ++i) direct(a, i) = coeff(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(i));
    auto residual = obj_.subgradient_residual(alpha, config_.kink_tolerance, hint);
    if (residual.relative > config_.tolerance) {
      const auto alt = obj_.subgradient_residual(direct, config_.kink_tolerance, hint);
      if (alt.relative < residual.relative) {
        alpha = std::move(direct);
        residual = alt;
      }
    }

    TrainResult result{KernelHypothesis(kernel, alpha, data.points)};
    result.objective = obj_.value(alpha);
    result.objective_at_zero = obj_.value_at_zero();
    result.constraint_residual = result.hypothesis.constraint_residual();
    result.residual = residual;
    result.iterations = iterations;
    trace.push_back(std::min(best, result.objective));
    result.trace = std::move(trace);
    result.converged = !budget_exhausted && result.residual.relative <= config_.tolerance;
    return result;
  }

 private:
  double smoothed_objective(const MatrixXd& beta, double mu) const {
    const MatrixXd f = beta * l_.transpose();
    double s = 0.0;
    const auto& w = obj_.sample_weights();
    for (const auto& t : obj_.terms()) s += w[t.sample] * smooth_hinge(margin(t, f), mu);
    return s + rho_ * beta.squaredNorm();
  }

  double exact_objective() const {
    const MatrixXd f = beta_ * l_.transpose();
    double s = 0.0;
    const auto& w = obj_.sample_weights();
    for (const auto& t : obj_.terms()) s += w[t.sample] * std::max(margin(t, f), 0.0);
    return s + rho_ * beta_.squaredNorm();
  }

  // One damped Newton step at smoothing width mu. Returns false once the
  // Newton decrement is negligible or no descent is possible.
  bool newton_step(double mu) {
    last_mu_ = mu;
    const Eigen::Index q = q_;
    const Eigen::Index r = l_.cols();
    const Eigen::Index m = l_.rows();
    if (r == 0) return false;
    const MatrixXd f = beta_ * l_.transpose();
    const auto& w = obj_.sample_weights();

    MatrixXd gamma = MatrixXd::Zero(q, m);
    // Per-sample Hessian of the loss in score space, stored per class pair.
    std::vector<VectorXd> curv(static_cast<std::size_t>(q * q));
    std::vector<char> pair_used(static_cast<std::size_t>(q * q), 0);
    for (auto& c : curv) c = VectorXd::Zero(m);
    double fval = 0.0;
    for (const auto& t : obj_.terms()) {
      const double z = margin(t, f);
      const auto n = static_cast<Eigen::Index>(t.sample);
      const double wn = w[t.sample];
      fval += wn * smooth_hinge(z, mu);
      const double d1 = smooth_hinge_d1(z, mu);
      gamma(t.plus, n) += wn * d1;
      if (t.minus >= 0) gamma(t.minus, n) -= wn * d1;
      const double d2 = wn * smooth_hinge_d2(z, mu);
      if (d2 == 0.0) continue;
      auto add = [&](int a, int b, double v) {
        const auto idx = static_cast<std::size_t>(a * q + b);
        curv[idx](n) += v;
        pair_used[idx] = 1;
      };
      add(t.plus, t.plus, d2);
      if (t.minus >= 0) {
        add(t.minus, t.minus, d2);
        add(t.plus, t.minus, -d2);
        add(t.minus, t.plus, -d2);
      }
    }
    fval += rho_ * beta_.squaredNorm();

    const MatrixXd grad = gamma * l_ + 2.0 * rho_ * beta_;  // q x r

    // Loss Hessian blocks L^T diag(curv_ab) L, computed on the samples that
    // carry curvature only.
    std::vector<MatrixXd> block(static_cast<std::size_t>(q * q));
    for (Eigen::Index a = 0; a < q; ++a) {
      for (Eigen::Index b = a; b < q; ++b) {
        const auto idx = static_cast<std::size_t>(a * q + b);
        if (!pair_used[idx]) continue;
        std::vector<Eigen::Index> rows;
        for (Eigen::Index n = 0; n < m; ++n)
          if (curv[idx](n) != 0.0) rows.push_back(n);
        MatrixXd sub(static_cast<Eigen::Index>(rows.size()), r);
        MatrixXd scaled(static_cast<Eigen::Index>(rows.size()), r);
        for (std::size_t k = 0; k < rows.size(); ++k) {
          sub.row(static_cast<Eigen::Index>(k)) = l_.row(rows[k]);
          scaled.row(static_cast<Eigen::Index>(k)) = l_.row(rows[k]) * curv[idx](rows[k]);
        }
        block[idx] = sub.transpose() * scaled;
        if (a != b) {
          block[static_cast<std::size_t>(b * q + a)] = block[idx].transpose();
          pair_used[static_cast<std::size_t>(b * q + a)] = 1;
        }
      }
    }
    auto loss_block = [&](Eigen::Index a, Eigen::Index b) -> const MatrixXd* {
      const auto idx = static_cast<std::size_t>(a * q + b);
      return pair_used[idx] ? &block[idx] : nullptr;
    };

    // Eliminate the last class: beta_{Q-1} = -sum_{a<Q-1} beta_a.
    const Eigen::Index last = q - 1;
    const Eigen::Index dim = last * r;
    MatrixXd h = MatrixXd::Zero(dim, dim);
    VectorXd g(dim);
    for (Eigen::Index a = 0; a < last; ++a) {
      g.segment(a * r, r) = (grad.row(a) - grad.row(last)).transpose();
      for (Eigen::Index b = 0; b < last; ++b) {
        auto blk = h.block(a * r, b * r, r, r);
        if (const auto* p = loss_block(a, b)) blk += *p;
        if (const auto* p = loss_block(a, last)) blk -= *p;
        if (const auto* p = loss_block(last, b)) blk -= *p;
        if (const auto* p = loss_block(last, last)) blk += *p;
        blk.diagonal().array() += 2.0 * rho_ * (a == b ? 2.0 : 1.0);
      }
    }

    Eigen::LLT<MatrixXd> llt(h);
    VectorXd step;
    if (llt.info() == Eigen::Success) {
      step = -llt.solve(g);
    } else {
      step = -Eigen::LDLT<MatrixXd>(h).solve(g);
    }
    const double slope = g.dot(step);
    if (!(slope < 0.0)) return false;
    if (-slope <= 1e-22 * std::max(1.0, fval)) return false;

    MatrixXd direction = MatrixXd::Zero(q, r);
    for (Eigen::Index a = 0; a < last; ++a) {
      direction.row(a) = step.segment(a * r, r).transpose();
      direction.row(last) -= direction.row(a);
    }

    double t = 1.0;
    for (int k = 0; k < 60; ++k) {
      const MatrixXd trial = beta_ + t * direction;
      const double ftrial = smoothed_objective(trial, mu);
      if (ftrial <= fval + 1e-4 * t * slope) {
        beta_ = trial;
        return true;
      }
      t *= 0.5;
    }
    return false;
  }

  const TrainingObjective& obj_;
  const TrainConfig& config_;
  MatrixXd l_;
  VectorXd inv_ev_;
  MatrixXd beta_;
  Eigen::Index q_ = 0;
  double rho_ = 0.0;
  double last_mu_ = kMuStart;
};

TrainResult run_subgradient(const TrainingObjective& obj, const TrainConfig& config, const Dataset& data,
                            const Kernel& kernel) {
  const auto q = static_cast<std::size_t>(obj.q_count());
  const std::size_t m = obj.sample_count();
  const Matrix& g = obj.gram().matrix();
  const auto& w = obj.sample_weights();
  const double lambda = obj.lambda();
  const double rho = obj.centered_regularization();
  const bool llw = obj.algorithm() == Algorithm::kLlw;

  Matrix alpha(q, m), f(q, m), avg(q, m), f_avg(q, m);
  Matrix best_alpha = alpha;
  double best = obj.value_at_zero();
  std::vector<double> trace;
  Matrix u(q, m);
  bool converged = false;
  int iterations = 0;

  auto value_of = [&](const Matrix& a, const Matrix& fa) {
    double loss = 0.0;
    for (const auto& t : obj.terms()) {
      double z = t.offset + fa(static_cast<std::size_t>(t.plus), t.sample);
      if (t.minus >= 0) z -= fa(static_cast<std::size_t>(t.minus), t.sample);
      if (z > 0.0) loss += w[t.sample] * z;
    }
    double reg = 0.0;
    if (llw) {
      for (std::size_t i = 0; i < a.data().size(); ++i) reg += a.data()[i] * fa.data()[i];
    } else {
      for (std::size_t p = 0; p < q; ++p)
        for (std::size_t r = p + 1; r < q; ++r)
          for (std::size_t i = 0; i < m; ++i) reg += (a(p, i) - a(r, i)) * (fa(p, i) - fa(r, i));
    }
    return loss + lambda * reg;
  };

  for (int it = 1; it <= config.max_iters; ++it) {
    iterations = it;
    std::fill(u.data().begin(), u.data().end(), 0.0);
    for (const auto& t : obj.terms()) {
      double z = t.offset + f(static_cast<std::size_t>(t.plus), t.sample);
      if (t.minus >= 0) z -= f(static_cast<std::size_t>(t.minus), t.sample);
      if (z <= 0.0) continue;
      u(static_cast<std::size_t>(t.plus), t.sample) += w[t.sample];
      if (t.minus >= 0) u(static_cast<std::size_t>(t.minus), t.sample) -= w[t.sample];
    }
    for (std::size_t i = 0; i < m; ++i) {
      double col = 0.0;
      for (std::size_t a = 0; a < q; ++a) col += alpha(a, i);
      double mean = 0.0;
      for (std::size_t a = 0; a < q; ++a) {
        const double reg = llw ? alpha(a, i) : static_cast<double>(q) * alpha(a, i) - col;
        u(a, i) += 2.0 * lambda * reg;
        mean += u(a, i);
      }
      mean /= static_cast<double>(q);
      for (std::size_t a = 0; a < q; ++a) u(a, i) -= mean;
    }

    const double eta = config.step_scale / (2.0 * rho * std::sqrt(static_cast<double>(it)));
    const Matrix ug = matmul(u, g);
    for (std::size_t k = 0; k < alpha.data().size(); ++k) {
      alpha.data()[k] -= eta * u.data()[k];
      f.data()[k] -= eta * ug.data()[k];
      avg.data()[k] += (alpha.data()[k] - avg.data()[k]) / it;
      f_avg.data()[k] += (f.data()[k] - f_avg.data()[k]) / it;
    }

    const double cur = value_of(alpha, f);
    const double averaged = value_of(avg, f_avg);
    if (cur < best) {
      best = cur;
      best_alpha = alpha;
    }
    if (averaged < best) {
      best = averaged;
      best_alpha = avg;
    }
    trace.push_back(best);

    if (it % 50 == 0 && it > 50) {
      const double before = trace[static_cast<std::size_t>(it - 51)];
      if (before - best <= config.tolerance * std::max(1.0, std::abs(best))) {
        converged = true;
        break;
      }
    }
  }

  TrainResult result{KernelHypothesis(kernel, best_alpha, data.points)};
  result.objective = obj.value(best_alpha);
  result.objective_at_zero = obj.value_at_zero();
  result.constraint_residual = result.hypothesis.constraint_residual();
  result.residual = obj.subgradient_residual(best_alpha, config.kink_tolerance);
  result.iterations = iterations;
  result.trace = std::move(trace);
  result.converged = converged;
  return result;
}

}  // namespace

TrainResult train(Algorithm algorithm, const Dataset& data, const Kernel& kernel, const TrainConfig& config) {
  config.validate();
  TrainingObjective objective(algorithm, data, kernel, config.lambda);
  if (config.optimizer == Optimizer::kSubgradient) return run_subgradient(objective, config, data, kernel);
  SmoothedNewton solver(objective, config);
  return solver.run(data, kernel);
}

TrainResult train_llw(const Dataset& data, const Kernel& kernel, const TrainConfig& config) {
  return train(Algorithm::kLlw, data, kernel, config);
}

TrainResult train_ww(const Dataset& data, const Kernel& kernel, const TrainConfig& config) {
  return train(Algorithm::kWw, data, kernel, config);
}

}  // namespace confstab
