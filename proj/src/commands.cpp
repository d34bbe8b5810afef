#include "confstab/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "confstab/bounds.hpp"
#include "confstab/concentration.hpp"
#include "confstab/config.hpp"
#include "confstab/error.hpp"
#include "confstab/io.hpp"
#include "confstab/random.hpp"

namespace confstab {

namespace {

namespace fs = std::filesystem;

struct Setup {
  ExperimentConfig config;
  std::uint64_t seed = 0;
  fs::path out;
};

Setup setup(const CommandOptions& o) {
  Setup s{load_config(o.config_path)};
  if (o.seed) s.config.experiment.seed = *o.seed;
  if (o.out_dir) s.config.output_dir = *o.out_dir;
  if (o.jobs < 1) throw ConfigError("jobs", "must be >= 1");
  s.seed = s.config.experiment.seed;
  s.out = s.config.output_dir;
  fs::create_directories(s.out);
  return s;
}

Dataset training_data(const Setup& s) {
  const auto& c = s.config;
  const auto seed = derive_seed(s.seed, stream::kTrainData);
  if (!c.data.class_counts.empty()) {
    auto labels = labels_from_counts(c.data.class_counts);
    auto points = sample_conditional(c.model, labels, seed);
    return Dataset{c.model.q, std::move(points), std::move(labels)};
  }
  return sample_joint(c.model, c.data.m, seed);
}

std::string json_text(const Json& j) { return j.dump(2) + "\n"; }

void write_json(const fs::path& p, const Json& j) { write_text_file(p.string(), json_text(j)); }

// Writes a CSV and re-reads it through the schema check.
void write_csv(const fs::path& p, const std::string& body, const std::vector<std::string>& header,
               const std::vector<bool>& numeric) {
  write_text_file(p.string(), body);
  check_csv(read_text_file(p.string()), header, numeric, p.string());
}

StabilityModel stability_model(Algorithm a) { return a == Algorithm::kLlw ? StabilityModel::kLlw : StabilityModel::kWw; }

double analytic_range(const ExperimentConfig& c, double kappa) {
  return c.trainer.algorithm == Algorithm::kLlw ? llw_range_bound(c.model.q, kappa, c.trainer.config.lambda)
                                                : ww_range_bound(c.model.q, kappa, c.trainer.config.lambda);
}

Json train_summary(const TrainResult& r, const ExperimentConfig& c) {
  return Json{{"algorithm", algorithm_key(c.trainer.algorithm)},
              {"lambda", c.trainer.config.lambda},
              {"objective", r.objective},
              {"objective_at_zero", r.objective_at_zero},
              {"constraint_residual", r.constraint_residual},
              {"subgradient_residual", r.residual.absolute},
              {"relative_residual", r.residual.relative},
              {"iterations", r.iterations},
              {"converged", r.converged}};
}

// Stable 64-bit fingerprint of a string (FNV-1a), used to tie a trial log to
// the configuration that produced it.
std::uint64_t fingerprint(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

int cmd_train(const CommandOptions& o, std::ostream& log) {
  const auto s = setup(o);
  const auto data = training_data(s);
  const auto result = s.config.trainer(data);

  const auto hyp_path = s.out / "hypothesis.json";
  write_json(hyp_path, hypothesis_to_json(result.hypothesis));
  const auto back = hypothesis_from_json(Json::parse(read_text_file(hyp_path.string())), hyp_path.string());
  if (!(back.alpha() == result.hypothesis.alpha()) || back.train_points() != result.hypothesis.train_points())
    throw Error("hypothesis file does not round-trip");
  write_text_file((s.out / "train_data.csv").string(), dataset_to_csv(data));
  write_json(s.out / "train_summary.json", train_summary(result, s.config));

  log << "train: objective " << format_double(result.objective) << " (J(0) = " << format_double(result.objective_at_zero)
      << "), constraint residual " << format_double(result.constraint_residual) << ", relative residual "
      << format_double(result.residual.relative) << (result.converged ? "" : " [not converged]") << "\n";
  return kExitOk;
}

int cmd_confusion(const ConfusionOptions& o, std::ostream& log) {
  const auto hyp = hypothesis_from_json(
      [&] {
        const auto body = read_text_file(o.hypothesis_path);
        try {
          return Json::parse(body);
        } catch (const Json::parse_error& e) {
          throw ParseError(o.hypothesis_path, 1, std::string("invalid JSON: ") + e.what());
        }
      }(),
      o.hypothesis_path);
  const int q = hyp.q_count();
  const auto data = dataset_from_csv(read_text_file(o.data_path), q, o.data_path);
  if (data.size() > 0 && common_dimension(data.points) != hyp.dimension())
    throw InvalidInputError("dataset dimension " + std::to_string(common_dimension(data.points)) +
                            " differs from the hypothesis dimension " + std::to_string(hyp.dimension()));
  const auto family = LossFamily::from_key(o.loss, q);

  std::optional<std::vector<double>> prior = o.prior;
  if (!prior && o.config_path) prior = load_config(*o.config_path).experiment.prior;
  const PriorVector pi = prior ? PriorVector(*prior) : PriorVector::empirical(data.labels, q);
  if (pi.size() != static_cast<std::size_t>(q)) throw InvalidInputError("prior must have Q entries");

  ConfusionAccumulator acc(static_cast<std::size_t>(q));
  std::vector<double> scores(static_cast<std::size_t>(q)), loss(static_cast<std::size_t>(q));
  for (std::size_t i = 0; i < data.size(); ++i) {
    hyp.predict_into(data.points[i], scores);
    family.evaluate(scores, data.labels[i], loss);
    acc.add(loss, static_cast<std::size_t>(data.labels[i]));
  }
  const ConfusionMatrix c = acc.confusion();
  const double norm = operator_norm(c.matrix());
  const auto rc = risk_from_confusion(c, pi);

  const fs::path out(o.out_dir);
  fs::create_directories(out);
  write_text_file((out / "confusion.csv").string(), matrix_to_csv(c.matrix()));
  matrix_from_csv(read_text_file((out / "confusion.csv").string()), (out / "confusion.csv").string());
  std::vector<std::size_t> counts;
  for (int k = 0; k < q; ++k) counts.push_back(acc.count(static_cast<std::size_t>(k)));
  write_json(out / "confusion_summary.json", Json{{"q", q},
                                                  {"loss", std::string(family.key())},
                                                  {"class_counts", counts},
                                                  {"prior", pi.values()},
                                                  {"operator_norm", norm},
                                                  {"risk", rc.risk},
                                                  {"cap", rc.cap},
                                                  {"risk_within_cap", rc.risk <= rc.cap}});
  log << "confusion: |C| = " << format_double(norm) << ", risk " << format_double(rc.risk) << " <= cap "
      << format_double(rc.cap) << (rc.risk <= rc.cap ? "" : "  VIOLATED") << "\n";
  return rc.risk <= rc.cap ? kExitOk : kExitAssertion;
}

int cmd_stability(const CommandOptions& o, std::ostream& log) {
  const auto s = setup(o);
  const auto& c = s.config;
  const auto data = training_data(s);
  const double kap = c.kappa();
  const double b = theoretical_B(c.trainer.loss_family(c.model.q), kap, c.trainer.config.lambda,
                                 stability_model(c.trainer.algorithm), c.model.q);

  std::vector<std::size_t> indices = c.experiment.indices;
  for (auto i : indices)
    if (i >= data.size()) throw ConfigError("experiment.indices", "index " + std::to_string(i + 1) + " out of range");
  if (indices.empty()) {
    // Partial Fisher-Yates draw of index_count distinct indices.
    std::vector<std::size_t> pool(data.size());
    for (std::size_t k = 0; k < pool.size(); ++k) pool[k] = k;
    Rng rng(derive_seed(s.seed, stream::kIndices));
    const std::size_t n = std::min(c.experiment.index_count, pool.size());
    for (std::size_t k = 0; k < n; ++k) std::swap(pool[k], pool[k + rng() % (pool.size() - k)]);
    indices.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));
    std::sort(indices.begin(), indices.end());
  }

  auto probes = c.experiment.probe_size > 0
                    ? sample_joint(c.model, c.experiment.probe_size, derive_seed(s.seed, stream::kProbe)).points
                    : std::vector<FeatureVector>{};
  probes.insert(probes.end(), data.points.begin(), data.points.end());

  ScanOptions so;
  so.mode = c.experiment.perturbation;
  so.jobs = o.jobs;
  const auto& model = c.model;
  const auto seed = s.seed;
  so.replacement = [&](std::size_t i) {
    const int y = data.labels[i];
    return sample_conditional(model, std::span<const int>(&y, 1), derive_seed(seed, stream::kReplacement, i)).front();
  };
  const auto report = stability_scan(c.trainer, data, b, indices, probes, so);

  write_csv(s.out / "stability.csv", stability_csv(report), {"index", "class", "m_q", "empirical", "cap", "ratio"},
            {true, true, true, true, true, true});
  std::size_t not_converged = report.base_converged ? 0 : 1;
  for (const auto& r : report.records) not_converged += r.converged ? 0 : 1;
  write_json(s.out / "stability_summary.json",
             Json{{"B", b},
                  {"kappa", kap},
                  {"lambda", c.trainer.config.lambda},
                  {"algorithm", algorithm_key(c.trainer.algorithm)},
                  {"perturbation", c.experiment.perturbation == PerturbationMode::kRemoveOne ? "remove_one" : "replace_one"},
                  {"probe_size", report.probe_size},
                  {"records", report.records.size()},
                  {"max_ratio", report.max_ratio},
                  {"violations", report.violations},
                  {"slack", kStabilitySlack},
                  {"non_converged_trainings", not_converged}});
  log << "stability: B = " << format_double(b) << ", max ratio " << format_double(report.max_ratio) << ", "
      << report.violations << " violation(s) over " << report.records.size() << " index(es)\n";
  if (not_converged) log << "stability: " << not_converged << " training(s) did not converge\n";
  return report.violations == 0 ? kExitOk : kExitAssertion;
}

int cmd_bound(const CommandOptions& o, std::ostream& log) {
  const auto s = setup(o);
  const auto& c = s.config;
  const int q = c.model.q;
  std::vector<std::size_t> counts = c.data.class_counts;
  if (counts.empty()) counts = label_counts(training_data(s).labels, q).counts;
  for (std::size_t k = 0; k < counts.size(); ++k)
    if (counts[k] < 2)
      throw PreconditionError("class " + std::to_string(k + 1) + " has fewer than 2 samples");
  const double kap = c.kappa();
  const double lambda = c.trainer.config.lambda;
  const double delta = c.experiment.delta;
  const bool llw = c.trainer.algorithm == Algorithm::kLlw;
  const double b = theoretical_B(c.trainer.loss_family(q), kap, lambda, stability_model(c.trainer.algorithm), q);
  const double m = analytic_range(c, kap);
  const BoundInputs in{q, counts, b, m, delta};
  const double generic = confusion_bound(in, false);
  const double strict = confusion_bound(in, true);
  const double special = llw ? llw_bound(q, kap, lambda, counts, delta) : ww_bound(q, kap, lambda, counts, delta);
  write_json(s.out / "bound.json", Json{{"algorithm", algorithm_key(c.trainer.algorithm)},
                                        {"q", q},
                                        {"class_counts", counts},
                                        {"m_star", in.m_star()},
                                        {"kappa", kap},
                                        {"lambda", lambda},
                                        {"delta", delta},
                                        {"B", b},
                                        {"beta_star", b / static_cast<double>(in.m_star())},
                                        {"M", m},
                                        {"bound", generic},
                                        {"bound_strict_constant", strict},
                                        {"bound_specialized", special}});
  log << "bound: " << format_double(generic) << " (B = " << format_double(b) << ", M = " << format_double(m)
      << ", strict constant " << format_double(strict) << ")\n";
  return kExitOk;
}

int cmd_concentration(const CommandOptions& o, std::ostream& log) {
  const auto s = setup(o);
  const auto& c = s.config;
  if (c.data.class_counts.empty())
    throw ConfigError("data.class_counts", "concentration runs need a fixed label sequence");
  const auto labels = labels_from_counts(c.data.class_counts);

  ConcentrationOptions co;
  co.trials = c.experiment.trials;
  co.delta = c.experiment.delta;
  co.holdout_per_class = c.experiment.holdout_per_class;
  co.seed = s.seed;
  co.jobs = o.jobs;
  co.strict_proof_constant = c.experiment.strict_proof_constant;
  co.kappa = c.kappa();

  // Resumable trial log, tied to the exact configuration and seed.
  Json identity = Json::parse(read_text_file(o.config_path));
  identity["experiment"]["seed"] = s.seed;
  identity.erase("output");
  const std::string tag = "# run " + std::to_string(fingerprint(identity.dump())) + "\n";
  const auto log_path = s.out / "concentration.partial.csv";
  std::vector<TrialRecord> completed;
  if (fs::exists(log_path)) {
    const auto body = read_text_file(log_path.string());
    if (body.rfind(tag, 0) == 0) {
      for (auto& r : trial_log_from_csv(std::string_view(body).substr(tag.size()), log_path.string()))
        if (r.trial < co.trials) completed.push_back(r);
      std::sort(completed.begin(), completed.end(), [](auto& a, auto& b) { return a.trial < b.trial; });
      completed.erase(std::unique(completed.begin(), completed.end(),
                                  [](auto& a, auto& b) { return a.trial == b.trial; }),
                      completed.end());
      log << "concentration: resuming with " << completed.size() << " completed trial(s)\n";
    }
  }
  {
    std::string body = tag + trial_log_header();
    for (const auto& r : completed) body += trial_log_row(r);
    write_text_file(log_path.string(), body);
  }
  std::ofstream trial_log(log_path, std::ios::app);
  const auto report = concentration_experiment(
      c.trainer, c.model, labels, co,
      [&](const TrialRecord& r) {
        trial_log << trial_log_row(r);
        trial_log.flush();
      },
      completed);
  trial_log.close();

  write_csv(s.out / "concentration.csv", concentration_csv(report.records, report.bound_analytic),
            {"trial", "deviation", "bound", "flags"}, {true, true, true, false});
  std::vector<double> deviations;
  for (const auto& r : report.records)
    if (r.converged) deviations.push_back(r.deviation);
  Json quantiles = Json::object();
  if (!deviations.empty()) {
    quantiles["0.5"] = upper_quantile(deviations, 0.5);
    quantiles["0.9"] = upper_quantile(deviations, 0.1);
    quantiles["1-delta"] = report.quantile;
    quantiles["max"] = *std::max_element(deviations.begin(), deviations.end());
  }
  write_json(s.out / "concentration_summary.json",
             Json{{"algorithm", algorithm_key(c.trainer.algorithm)},
                  {"trials", report.records.size()},
                  {"excluded_not_converged", report.excluded},
                  {"delta", co.delta},
                  {"strict_proof_constant", co.strict_proof_constant},
                  {"quantile", report.quantile},
                  {"quantiles", quantiles},
                  {"estimation_slack", report.estimation_slack},
                  {"B", report.B},
                  {"M_analytic", report.analytic_M},
                  {"M_empirical", report.empirical_M},
                  {"bound_analytic_M", report.bound_analytic},
                  {"bound_empirical_M", report.bound_empirical},
                  {"pass_analytic_M", report.pass_analytic},
                  {"pass_empirical_M", report.pass_empirical},
                  {"pass", report.pass()}});
  fs::remove(log_path);
  log << "concentration: " << (1.0 - co.delta) * 100 << "% quantile " << format_double(report.quantile)
      << " vs bounds " << format_double(report.bound_analytic) << " (analytic M), "
      << format_double(report.bound_empirical) << " (empirical M); " << report.excluded << " excluded\n";
  return report.pass() ? kExitOk : kExitAssertion;
}

int cmd_mcdiarmid(const CommandOptions& o, std::ostream& log) {
  const auto s = setup(o);
  const auto& c = s.config;
  const auto& spec = c.experiment.mcdiarmid;
  const auto data = training_data(s);
  const int q = c.model.q;

  McDiarmidProblem problem;
  double range = 0.0;
  if (spec.functional == "constant") {
    problem.m = data.size();
    const auto dim = 2 * static_cast<std::size_t>(q);
    problem.draw = [](std::size_t, Rng&) { return Draw{}; };
    problem.functional = [dim](std::span<const Draw>) { return Matrix(dim, dim); };
    for (std::size_t i = 0; i < problem.m; ++i)
      problem.caps.push_back(Matrix::identity(dim) * (1.0 / static_cast<double>(problem.m)));
  } else {
    const auto stats = label_counts(data.labels, q);
    for (std::size_t k = 0; k < stats.counts.size(); ++k)
      if (stats.counts[k] == 0) throw PreconditionError("class " + std::to_string(k + 1) + " has no samples");
    const auto trained = c.trainer(data);
    const auto family = c.trainer.loss_family(q);
    range = certified_range_bound(trained.hypothesis, family, c.kappa());
    problem = fixed_hypothesis_problem(trained.hypothesis, family, c.model, data.labels, range);
  }

  McDiarmidOptions mo;
  mo.trials = spec.trials;
  mo.mean_samples = spec.mean_samples;
  mo.probe_count = spec.probe_count;
  mo.grid_points = spec.grid_points;
  mo.seed = derive_seed(s.seed, stream::kFixedHypothesis);
  mo.jobs = o.jobs;
  const auto report = verify_mcdiarmid(problem, mo);

  write_csv(s.out / "mcdiarmid.csv", tail_csv(report), {"t", "empirical", "theoretical", "stderr", "pass"},
            {true, true, true, true, true});
  std::size_t failing = 0;
  for (const auto& r : report.rows) failing += r.pass ? 0 : 1;
  write_json(s.out / "mcdiarmid_summary.json", Json{{"functional", spec.functional},
                                                    {"dimension", report.dimension},
                                                    {"trials", report.trials},
                                                    {"sigma_sq", report.sigma_sq},
                                                    {"range_bound", range},
                                                    {"max_deviation", report.max_deviation},
                                                    {"grid_points", report.rows.size()},
                                                    {"failing_points", failing},
                                                    {"pass", report.pass}});
  log << "mcdiarmid: sigma^2 = " << format_double(report.sigma_sq) << ", max deviation "
      << format_double(report.max_deviation) << ", " << failing << " failing grid point(s)\n";
  return report.pass ? kExitOk : kExitAssertion;
}

}  // namespace confstab
