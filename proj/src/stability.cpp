#include "confstab/stability.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "confstab/error.hpp"

namespace confstab {

LossFamily Trainer::loss_family(int q) const {
  return algorithm == Algorithm::kLlw ? LossFamily::llw(q) : LossFamily::ww(q);
}

double theoretical_B(const LossFamily& family, double kappa, double lambda, StabilityModel model, int q) {
  if (!std::isfinite(kappa)) throw UnboundedKernelError("kappa must be finite");
  if (!(kappa >= 0.0)) throw InvalidInputError("kappa must be nonnegative");
  if (!(lambda > 0.0)) throw InvalidInputError("lambda must be positive");
  if (q < 2) throw InvalidInputError("Q must be at least 2");
  if (std::isinf(lambda)) return 0.0;
  const double qd = q;
  const double k2 = kappa * kappa;
  switch (model) {
    case StabilityModel::kLlw:
      return qd * k2 / (2.0 * lambda);
    case StabilityModel::kWw:
      return qd * qd * k2 / (4.0 * lambda);
    case StabilityModel::kGenericRkhs: {
      double s2 = 0.0;
      for (double s : family.sigma()) {
        if (!std::isfinite(s)) throw InvalidInputError("loss family is not multi-admissible (infinite sigma)");
        s2 = std::max(s2, s * s);
      }
      return s2 * qd * k2 / (2.0 * lambda);
    }
  }
  return 0.0;
}

namespace {

void check_preconditions(const Dataset& data, std::size_t index, std::span<const FeatureVector> probes,
                         PerturbationMode mode, const FeatureVector& replacement) {
  if (index >= data.size()) throw IndexError("sample index " + std::to_string(index) + " out of range");
  if (probes.empty()) throw InvalidInputError("probe set is empty");
  if (mode == PerturbationMode::kReplaceOne && replacement.empty())
    throw InvalidInputError("replace-one needs a replacement point");
  const int y = data.labels[index];
  const auto stats = label_counts(data.labels, data.q);
  if (stats.counts[static_cast<std::size_t>(y)] < 2)
    throw PreconditionError("class " + std::to_string(y + 1) + " has fewer than 2 samples");
}

double loss_matrix_gap(const LossFamily& family, const KernelHypothesis& a, const KernelHypothesis& b,
                       std::span<const FeatureVector> probes, int y) {
  const auto q = static_cast<std::size_t>(family.q_count());
  std::vector<double> sa(q), sb(q), la(q), lb(q);
  double worst = 0.0;
  for (const auto& x : probes) {
    a.predict_into(x, sa);
    b.predict_into(x, sb);
    family.evaluate(sa, y, la);
    family.evaluate(sb, y, lb);
    const auto ma = loss_matrix(la, static_cast<std::size_t>(y));
    const auto mb = loss_matrix(lb, static_cast<std::size_t>(y));
    worst = std::max(worst, operator_norm(ma.matrix() - mb.matrix()));
  }
  return worst;
}

}  // namespace

double measure_perturbation(const Trainer& trainer, const Dataset& data, std::size_t index,
                            std::span<const FeatureVector> probes, PerturbationMode mode,
                            const FeatureVector& replacement) {
  check_preconditions(data, index, probes, mode, replacement);
  const auto base = trainer(data);
  return measure_perturbation(trainer, data, base.hypothesis, index, probes, mode, replacement);
}

double measure_perturbation(const Trainer& trainer, const Dataset& data, const KernelHypothesis& base,
                            std::size_t index, std::span<const FeatureVector> probes, PerturbationMode mode,
                            const FeatureVector& replacement, bool* converged) {
  check_preconditions(data, index, probes, mode, replacement);
  const Dataset perturbed =
      mode == PerturbationMode::kRemoveOne ? data.without(index) : data.with_replacement(index, replacement);
  const auto other = trainer(perturbed);
  if (converged) *converged = other.converged;
  return loss_matrix_gap(trainer.loss_family(data.q), base, other.hypothesis, probes, data.labels[index]);
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < count; k = next++) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

StabilityReport stability_scan(const Trainer& trainer, const Dataset& data, double b_theoretical,
                               std::span<const std::size_t> indices, std::span<const FeatureVector> probes,
                               const ScanOptions& options) {
  StabilityReport report;
  report.b_theoretical = b_theoretical;
  report.probe_size = probes.size();
  if (indices.empty()) return report;

  const auto stats = label_counts(data.labels, data.q);
  std::vector<FeatureVector> replacements(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t i = indices[k];
    if (options.mode == PerturbationMode::kReplaceOne) {
      if (!options.replacement) throw InvalidInputError("replace-one scan needs a replacement generator");
      if (i < data.size()) replacements[k] = options.replacement(i);
    }
    check_preconditions(data, i, probes, options.mode,
                        options.mode == PerturbationMode::kReplaceOne ? replacements[k] : FeatureVector{});
  }

  const auto base = trainer(data);
  report.base_converged = base.converged;
  report.records.resize(indices.size());
  parallel_for(indices.size(), options.jobs, [&](std::size_t k) {
    const std::size_t i = indices[k];
    StabilityRecord rec;
    rec.index = i;
    rec.label = data.labels[i];
    rec.class_count = stats.counts[static_cast<std::size_t>(rec.label)];
    rec.empirical = measure_perturbation(trainer, data, base.hypothesis, i, probes, options.mode, replacements[k],
                                         &rec.converged);
    rec.cap = b_theoretical / static_cast<double>(rec.class_count);
    rec.ratio = rec.cap > 0.0 ? rec.empirical / rec.cap : (rec.empirical > 0.0 ? INFINITY : 0.0);
    report.records[k] = rec;
  });
  for (const auto& rec : report.records) {
    report.max_ratio = std::max(report.max_ratio, rec.ratio);
    if (rec.empirical > rec.cap + options.slack) ++report.violations;
  }
  return report;
}

}  // namespace confstab
