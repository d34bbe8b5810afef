#include "confstab/concentration.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <string>

#include "confstab/error.hpp"

namespace confstab {

namespace {

double frobenius(const Matrix& m) {
  double s = 0.0;
  for (double v : m.data()) s += v * v;
  return std::sqrt(s);
}

std::vector<Draw> draw_all(const McDiarmidProblem& p, Rng& rng) {
  std::vector<Draw> z;
  z.reserve(p.m);
  for (std::size_t i = 0; i < p.m; ++i) z.push_back(p.draw(i, rng));
  return z;
}

Matrix checked_value(const McDiarmidProblem& p, std::span<const Draw> z, std::size_t dim) {
  Matrix h = p.functional(z);
  if (h.rows() != dim || h.cols() != dim)
    throw InvalidInputError("functional changed shape: expected " + std::to_string(dim) + "x" + std::to_string(dim));
  return h;
}

void check_caps(const McDiarmidProblem& p, const std::vector<Matrix>& cap_sq, std::size_t dim,
                const McDiarmidOptions& o) {
  for (std::size_t k = 0; k < o.probe_count; ++k) {
    Rng rng(derive_seed(o.seed, stream::kCapProbe, k));
    const std::size_t i = k % p.m;
    auto z = draw_all(p, rng);
    const Matrix h1 = checked_value(p, z, dim);
    z[i] = p.draw(i, rng);
    const Matrix d = h1 - checked_value(p, z, dim);
    const Matrix gap = cap_sq[i] - matmul(d, d);
    const double tol = 1e-9 * std::max(1.0, frobenius(cap_sq[i]));
    const auto ev = symmetric_eigenvalues(gap);
    if (ev.front() < -tol)
      throw InvalidCapsError("cap for coordinate " + std::to_string(i + 1) +
                             " does not dominate a sampled difference (min eigenvalue " + std::to_string(ev.front()) +
                             ")");
  }
}

}  // namespace

McDiarmidReport verify_mcdiarmid(const McDiarmidProblem& p, const McDiarmidOptions& o) {
  if (p.m == 0) throw InvalidInputError("problem has no coordinates");
  if (!p.draw || !p.functional) throw InvalidInputError("problem needs draw and functional");
  if (p.caps.size() != p.m) throw InvalidInputError("need one cap per coordinate");
  const std::size_t dim = p.caps.front().rows();
  if (dim == 0 || dim % 2 != 0) throw InvalidInputError("H must be a dilation (even dimension)");
  for (const auto& a : p.caps)
    if (a.rows() != dim || a.cols() != dim) throw InvalidInputError("caps must share the shape of H");

  McDiarmidReport report;
  report.dimension = dim;
  report.trials = o.trials;

  std::vector<Matrix> cap_sq;
  Matrix total(dim, dim);
  for (const auto& a : p.caps) {
    cap_sq.push_back(matmul(a, a));
    total += cap_sq.back();
  }
  report.sigma_sq = operator_norm(total);
  if (!(report.sigma_sq > 0.0)) throw InvalidInputError("caps are all zero");
  check_caps(p, cap_sq, dim, o);

  Matrix expected(dim, dim);
  if (p.expected) {
    expected = *p.expected;
  } else {
    if (o.mean_samples == 0) throw InvalidInputError("mean_samples must be positive");
    for (std::size_t s = 0; s < o.mean_samples; ++s) {
      Rng rng(derive_seed(o.seed, stream::kExpectation, s));
      expected += checked_value(p, draw_all(p, rng), dim);
    }
    expected *= 1.0 / static_cast<double>(o.mean_samples);
  }

  std::vector<double> deviation(o.trials);
  parallel_for(o.trials, o.jobs, [&](std::size_t t) {
    Rng rng(derive_seed(o.seed, stream::kTrial, t));
    deviation[t] = operator_norm(checked_value(p, draw_all(p, rng), dim) - expected);
  });
  for (double d : deviation) report.max_deviation = std::max(report.max_deviation, d);

  const int q = static_cast<int>(dim / 2);
  std::vector<double> grid = o.t_grid;
  if (grid.empty()) {
    const double t_max = std::max(mcdiarmid_quantile(q, report.sigma_sq, 0.01), 1.05 * report.max_deviation);
    for (std::size_t k = 1; k <= o.grid_points; ++k)
      grid.push_back(t_max * static_cast<double>(k) / static_cast<double>(o.grid_points));
  }
  std::sort(deviation.begin(), deviation.end());
  for (double t : grid) {
    TailRow row;
    row.t = t;
    row.theoretical = mcdiarmid_tail(q, report.sigma_sq, t);
    if (o.trials > 0) {
      const auto above = deviation.end() - std::lower_bound(deviation.begin(), deviation.end(), t);
      row.empirical = static_cast<double>(above) / static_cast<double>(o.trials);
      row.standard_error = std::sqrt(row.empirical * (1.0 - row.empirical) / static_cast<double>(o.trials));
    }
    row.pass = row.empirical <= row.theoretical + 3.0 * row.standard_error;
    report.pass = report.pass && row.pass;
    report.rows.push_back(row);
  }
  return report;
}

double certified_range_bound(const KernelHypothesis& h, const LossFamily& family, double kappa) {
  if (!std::isfinite(kappa) || kappa < 0.0) throw InvalidInputError("kappa must be finite and nonnegative");
  if (family.q_count() != h.q_count()) throw InvalidInputError("loss family and hypothesis disagree on Q");
  if (family.kind() == LossKind::kZeroOne) return 1.0;
  const auto norms = rkhs_norms(h);
  const auto q = static_cast<std::size_t>(h.q_count());
  double worst = 0.0;
  if (family.kind() == LossKind::kLlw) {
    for (double n2 : norms.squared) worst = std::max(worst, kappa * std::sqrt(std::max(0.0, n2)));
    return worst + 1.0 / static_cast<double>(q - 1);
  }
  for (std::size_t a = 0; a < q; ++a)
    for (std::size_t b = 0; b < q; ++b)
      if (a != b) worst = std::max(worst, kappa * std::sqrt(std::max(0.0, norms.pairwise_squared(a, b))));
  return 1.0 + worst;
}

McDiarmidProblem fixed_hypothesis_problem(const KernelHypothesis& h, const LossFamily& family,
                                          const ClassConditionalModel& model, std::vector<int> labels,
                                          double range) {
  const int q = family.q_count();
  if (h.q_count() != q || model.q != q) throw InvalidInputError("hypothesis, loss and model disagree on Q");
  if (!(range >= 0.0) || !std::isfinite(range)) throw InvalidInputError("range bound must be finite");
  const auto stats = label_counts(labels, q);
  McDiarmidProblem p;
  p.m = labels.size();
  const double scale = std::sqrt(static_cast<double>(q)) * range;
  for (int y : labels) {
    Matrix cap = Matrix::identity(2 * static_cast<std::size_t>(q));
    cap *= scale / static_cast<double>(stats.counts[static_cast<std::size_t>(y)]);
    p.caps.push_back(std::move(cap));
  }
  p.draw = [model, labels](std::size_t i, Rng& rng) {
    const int y = labels[i];
    return sample_conditional(model, std::span<const int>(&y, 1), rng()).front();
  };
  p.functional = [h, family, labels, q](std::span<const Draw> z) {
    ConfusionAccumulator acc(static_cast<std::size_t>(q));
    std::vector<double> scores(static_cast<std::size_t>(q)), loss(static_cast<std::size_t>(q));
    for (std::size_t i = 0; i < z.size(); ++i) {
      h.predict_into(z[i], scores);
      family.evaluate(scores, labels[i], loss);
      acc.add(loss, static_cast<std::size_t>(labels[i]));
    }
    return dilate(acc.confusion().matrix()).matrix();
  };
  return p;
}

double upper_quantile(std::vector<double> values, double delta) {
  if (values.empty()) return 0.0;
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInputError("delta must lie in (0, 1)");
  std::sort(values.begin(), values.end());
  const double pos = std::ceil((1.0 - delta) * static_cast<double>(values.size()) - 1e-9);
  const auto k = static_cast<std::size_t>(std::clamp(pos, 1.0, static_cast<double>(values.size())));
  return values[k - 1];
}

namespace {

void accumulate(ConfusionAccumulator& acc, const KernelHypothesis& h, const LossFamily& family,
                std::span<const FeatureVector> points, std::span<const int> labels) {
  const auto q = static_cast<std::size_t>(family.q_count());
  std::vector<double> scores(q), loss(q);
  for (std::size_t i = 0; i < points.size(); ++i) {
    h.predict_into(points[i], scores);
    family.evaluate(scores, labels[i], loss);
    acc.add(loss, static_cast<std::size_t>(labels[i]));
  }
}

}  // namespace

ConcentrationReport concentration_experiment(const Trainer& trainer, const ClassConditionalModel& model,
                                             const std::vector<int>& labels, const ConcentrationOptions& options,
                                             const std::function<void(const TrialRecord&)>& on_trial,
                                             std::vector<TrialRecord> completed) {
  model.validate();
  const int q = model.q;
  const auto stats = label_counts(labels, q);
  for (std::size_t k = 0; k < stats.counts.size(); ++k)
    if (stats.counts[k] < 2)
      throw DegenerateClassError("class " + std::to_string(k + 1) + " has fewer than 2 samples");
  if (!(options.delta > 0.0 && options.delta < 1.0)) throw InvalidInputError("delta must lie in (0, 1)");
  if (options.holdout_per_class == 0) throw InvalidInputError("holdout_per_class must be positive");

  const LossFamily family = trainer.loss_family(q);
  const double kap = options.kappa ? *options.kappa : kappa(trainer.kernel, std::nullopt);
  const double lambda = trainer.config.lambda;
  const bool llw = trainer.algorithm == Algorithm::kLlw;

  ConcentrationReport report;
  report.B = theoretical_B(family, kap, lambda, llw ? StabilityModel::kLlw : StabilityModel::kWw, q);
  report.analytic_M = llw ? llw_range_bound(q, kap, lambda) : ww_range_bound(q, kap, lambda);

  std::vector<char> done(options.trials, 0);
  for (const auto& r : completed) {
    if (r.trial >= options.trials) throw InvalidInputError("completed trial " + std::to_string(r.trial) + " out of range");
    if (done[r.trial]) throw InvalidInputError("completed trial " + std::to_string(r.trial) + " listed twice");
    done[r.trial] = 1;
  }
  std::vector<std::size_t> todo;
  for (std::size_t t = 0; t < options.trials; ++t)
    if (!done[t]) todo.push_back(t);

  // One held-out conditional sample per class, shared by every trial; it is
  // independent of all training draws.
  std::vector<FeatureVector> holdout_points;
  std::vector<int> holdout_labels;
  if (!todo.empty()) {
    for (int c = 0; c < q; ++c) {
      std::vector<int> ys(options.holdout_per_class, c);
      auto pts = sample_conditional(model, ys, derive_seed(options.seed, stream::kHoldout, static_cast<std::uint64_t>(c)));
      holdout_points.insert(holdout_points.end(), std::make_move_iterator(pts.begin()),
                            std::make_move_iterator(pts.end()));
      holdout_labels.insert(holdout_labels.end(), ys.begin(), ys.end());
    }
  }

  std::vector<TrialRecord> fresh(todo.size());
  std::mutex callback_mutex;
  parallel_for(todo.size(), options.jobs, [&](std::size_t k) {
    const std::size_t t = todo[k];
    Dataset data{q, sample_conditional(model, labels, derive_seed(options.seed, stream::kTrial, t)), labels};
    const auto res = trainer(data);
    ConfusionAccumulator train_acc(static_cast<std::size_t>(q)), held_acc(static_cast<std::size_t>(q));
    accumulate(train_acc, res.hypothesis, family, data.points, data.labels);
    accumulate(held_acc, res.hypothesis, family, holdout_points, holdout_labels);
    TrialRecord rec;
    rec.trial = t;
    rec.deviation = operator_norm(train_acc.confusion().matrix() - held_acc.confusion().matrix());
    rec.estimation_slack = 3.0 * frobenius(held_acc.standard_errors());
    rec.max_loss = std::max(train_acc.max_entry(), held_acc.max_entry());
    rec.converged = res.converged;
    rec.objective = res.objective;
    fresh[k] = rec;
    if (on_trial) {
      std::lock_guard lock(callback_mutex);
      on_trial(rec);
    }
  });

  report.records = std::move(completed);
  report.records.insert(report.records.end(), fresh.begin(), fresh.end());
  std::sort(report.records.begin(), report.records.end(),
            [](const TrialRecord& a, const TrialRecord& b) { return a.trial < b.trial; });

  std::vector<double> deviations;
  for (const auto& r : report.records) {
    if (!r.converged) {
      ++report.excluded;
      continue;
    }
    deviations.push_back(r.deviation);
    report.estimation_slack = std::max(report.estimation_slack, r.estimation_slack);
    report.empirical_M = std::max(report.empirical_M, r.max_loss);
  }
  report.quantile = upper_quantile(deviations, options.delta);

  BoundInputs in{q, stats.counts, report.B, report.analytic_M, options.delta};
  report.bound_analytic = confusion_bound(in, options.strict_proof_constant);
  in.M = report.empirical_M;
  report.bound_empirical = confusion_bound(in, options.strict_proof_constant);
  if (deviations.empty()) {
    // Nothing to judge; only a run with no trials at all passes vacuously.
    report.pass_analytic = report.pass_empirical = report.records.empty();
  } else {
    report.pass_analytic = report.quantile <= report.bound_analytic + report.estimation_slack;
    report.pass_empirical = report.quantile <= report.bound_empirical + report.estimation_slack;
  }
  return report;
}

}  // namespace confstab
