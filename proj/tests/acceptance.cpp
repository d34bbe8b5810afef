// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "confstab/bounds.hpp"
#include "confstab/concentration.hpp"
#include "confstab/io.hpp"
#include "confstab/learners.hpp"
#include "confstab/loss.hpp"
#include "confstab/matrix.hpp"
#include "confstab/stability.hpp"
#include "confstab/synth.hpp"
#include "oracles.hpp"

using namespace confstab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Operator norm against a full SVD, and dilation norm equality.
Outcome c1() {
  std::mt19937_64 rng(1001);
  const auto t0 = std::chrono::steady_clock::now();
  double worst_svd = 0.0, worst_dil = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const auto q = static_cast<std::size_t>(oracle::uniform_int(rng, 2, 10));
    Matrix a;
    switch (t % 4) {
      case 0: a = oracle::random_matrix(rng, q, q); break;
      case 1: a = oracle::random_confusion(rng, q); break;
      case 2: {  // rank one
        a = Matrix(q, q);
        std::vector<double> u(q), v(q);
        for (auto& x : u) x = oracle::uniform(rng, -1, 1);
        for (auto& x : v) x = oracle::uniform(rng, -1, 1);
        for (std::size_t r = 0; r < q; ++r)
          for (std::size_t c = 0; c < q; ++c) a(r, c) = u[r] * v[c];
        break;
      }
      default: a = oracle::random_matrix(rng, q, q, std::pow(10.0, oracle::uniform(rng, -3, 2)));
    }
    const double n = operator_norm(a);
    worst_svd = std::max(worst_svd, std::abs(n - oracle::svd_norm(a)));
    worst_dil = std::max(worst_dil, std::abs(operator_norm(dilate(a).matrix()) - n));
  }
  const double secs = seconds_since(t0);
  return {worst_svd <= 1e-9 && worst_dil <= 1e-10 && secs < 10.0,
          "1000 matrices, max |norm - svd| " + fmt(worst_svd) + ", max dilation gap " + fmt(worst_dil) + ", " +
              fmt(secs) + " s"};
}

// l1 risk under a prior is at most sqrt(Q) times the operator norm.
Outcome c2() {
  std::mt19937_64 rng(1002);
  const auto t0 = std::chrono::steady_clock::now();
  int violations = 0, oracle_mismatch = 0;
  double tightest = 0.0;
  for (int t = 0; t < 10'000; ++t) {
    const auto q = static_cast<std::size_t>(oracle::uniform_int(rng, 2, 10));
    const auto c = oracle::random_confusion(rng, q);
    const auto pi = oracle::random_prior(rng, q);
    const auto rc = risk_from_confusion(ConfusionMatrix(c), PriorVector(pi));
    double risk = 0.0;
    for (std::size_t col = 0; col < q; ++col) {
      double s = 0.0;
      for (std::size_t r = 0; r < q; ++r) s += pi[r] * c(r, col);
      risk += std::abs(s);
    }
    const double cap = std::sqrt(static_cast<double>(q)) * oracle::svd_norm(c);
    if (std::abs(risk - rc.risk) > 1e-12 || std::abs(cap - rc.cap) > 1e-9) ++oracle_mismatch;
    if (rc.risk > rc.cap) ++violations;
    if (rc.cap > 0) tightest = std::max(tightest, rc.risk / rc.cap);
  }
  const double secs = seconds_since(t0);
  return {violations == 0 && oracle_mismatch == 0 && secs < 5.0,
          "10000 pairs, " + std::to_string(violations) + " violations, " + std::to_string(oracle_mismatch) +
              " oracle mismatches, max risk/cap " + fmt(tightest) + ", " + fmt(secs) + " s"};
}

// Specialized machine bounds equal the generic bound with their constants.
Outcome c3() {
  std::mt19937_64 rng(1003);
  double worst = 0.0;
  int mono = 0, probes = 0;
  for (int t = 0; t < 1000; ++t) {
    const int q = oracle::uniform_int(rng, 2, 10);
    const double kappa = oracle::uniform(rng, 0.1, 3.0);
    const double lambda = std::pow(10.0, oracle::uniform(rng, -3, 3));
    const double delta = oracle::uniform(rng, 1e-4, 0.999);
    const bool strict = t % 2 == 1;
    std::vector<std::size_t> counts(static_cast<std::size_t>(q));
    for (auto& m : counts) m = static_cast<std::size_t>(oracle::uniform_int(rng, 2, 500));

    const auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
    BoundInputs in{q, counts, theoretical_B(LossFamily::llw(q), kappa, lambda, StabilityModel::kLlw, q),
                   llw_range_bound(q, kappa, lambda), delta};
    worst = std::max(worst, rel(llw_bound(q, kappa, lambda, counts, delta, strict), confusion_bound(in, strict)));
    BoundInputs ww{q, counts, theoretical_B(LossFamily::ww(q), kappa, lambda, StabilityModel::kWw, q),
                   ww_range_bound(q, kappa, lambda), delta};
    worst = std::max(worst, rel(ww_bound(q, kappa, lambda, counts, delta, strict), confusion_bound(ww, strict)));

    const double base = confusion_bound(in, strict);
    auto probe = [&](BoundInputs changed, bool should_grow) {
      const double v = confusion_bound(changed, strict);
      ++probes;
      if (should_grow ? v < base : v > base) ++mono;
    };
    auto more = in;
    more.class_counts[static_cast<std::size_t>(oracle::uniform_int(rng, 0, q - 1))] += 1 + rng() % 50;
    probe(more, false);
    auto bigger_b = in;
    bigger_b.B *= oracle::uniform(rng, 1.0, 3.0);
    probe(bigger_b, true);
    auto bigger_m = in;
    bigger_m.M *= oracle::uniform(rng, 1.0, 3.0);
    probe(bigger_m, true);
    auto looser = in;
    looser.delta = oracle::uniform(rng, delta, 0.9999);
    probe(looser, false);
  }
  return {worst <= 1e-12 && mono == 0,
          "1000 grid points, max relative gap " + fmt(worst) + ", " + std::to_string(mono) + "/" +
              std::to_string(probes) + " monotonicity violations"};
}

Dataset sample_counts(const ClassConditionalModel& model, const std::vector<std::size_t>& counts, std::uint64_t seed) {
  Dataset d;
  d.q = model.q;
  d.labels = labels_from_counts(counts);
  d.points = sample_conditional(model, d.labels, seed);
  return d;
}

// Trainers reach KKT points; separable data is fit exactly.
Outcome c4() {
  std::mt19937_64 rng(1004);
  const auto t0 = std::chrono::steady_clock::now();
  double worst_res = 0.0, worst_con = 0.0, worst_eval = 0.0;
  int failures = 0;
  for (int t = 0; t < 20; ++t) {
    const int q = oracle::uniform_int(rng, 2, 4);
    std::vector<std::size_t> counts(static_cast<std::size_t>(q));
    const int per_class_max = 200 / q;
    for (auto& m : counts) m = static_cast<std::size_t>(oracle::uniform_int(rng, 3, per_class_max));
    const auto model = simplex_model(q, oracle::uniform(rng, 0.5, 4.0), 1.0);
    const auto data = sample_counts(model, counts, rng());
    Kernel kernel = Kernel::linear();
    if (t % 3 == 0) kernel = Kernel::gaussian(oracle::uniform(rng, 0.1, 2.0));
    if (t % 3 == 1) kernel = Kernel::polynomial(2, 1.0);
    TrainConfig cfg;
    cfg.lambda = std::pow(10.0, oracle::uniform(rng, -2, 1));
    for (auto alg : {Algorithm::kLlw, Algorithm::kWw}) {
      const auto r = train(alg, data, kernel, cfg);
      const double independent = oracle::objective(alg, r.hypothesis, data.points, data.labels, cfg.lambda);
      const double zero =
          oracle::objective(alg, KernelHypothesis(kernel, Matrix(static_cast<std::size_t>(q), data.size()), data.points),
                            data.points, data.labels, cfg.lambda);
      worst_res = std::max(worst_res, r.residual.relative);
      worst_eval = std::max(worst_eval, std::abs(independent - r.objective) / (1.0 + std::abs(independent)));
      if (alg == Algorithm::kLlw) worst_con = std::max(worst_con, r.hypothesis.constraint_residual());
      if (r.residual.relative > 1e-4 || independent > zero || r.objective > r.objective_at_zero) ++failures;
    }
  }
  if (worst_con > 1e-6 || worst_eval > 1e-9) ++failures;

  // Two gaussians 8 sigma apart.
  const auto model = simplex_model(2, 8.0, 1.0);
  const auto data = sample_counts(model, {60, 60}, 1004);
  double sep_norm = 0.0;
  for (auto alg : {Algorithm::kLlw, Algorithm::kWw}) {
    TrainConfig cfg;
    cfg.lambda = 1e-3;
    const auto r = train(alg, data, Kernel::linear(), cfg);
    const auto zo = LossFamily::zero_one(2);
    ConfusionAccumulator acc(2);
    for (std::size_t i = 0; i < data.size(); ++i)
      acc.add(zo.evaluate(r.hypothesis.predict(data.points[i]), data.labels[i]),
              static_cast<std::size_t>(data.labels[i]));
    sep_norm = std::max(sep_norm, operator_norm(acc.confusion().matrix()));
  }
  const double secs = seconds_since(t0);
  return {failures == 0 && sep_norm == 0.0 && secs < 120.0,
          "40 trainings, max relative residual " + fmt(worst_res) + ", max LLW sum-to-zero residual " +
              fmt(worst_con) + ", objective oracle gap " + fmt(worst_eval) + ", separable confusion norm " +
              fmt(sep_norm) + ", " + fmt(secs) + " s"};
}

// Measured loss-matrix perturbation stays under B / m_{y_i}.
Outcome c5() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto model = simplex_model(2, 2.0, 1.0);
  const auto data = sample_counts(model, {20, 20}, 1005);
  auto probes = sample_joint(model, 2000, 2005).points;
  probes.insert(probes.end(), data.points.begin(), data.points.end());
  std::mt19937_64 rng(3005);
  std::vector<std::size_t> all(data.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::shuffle(all.begin(), all.end(), rng);
  std::vector<std::size_t> indices(all.begin(), all.begin() + 10);
  std::sort(indices.begin(), indices.end());

  std::size_t violations = 0, unconverged = 0;
  double max_ratio = 0.0;
  for (auto alg : {Algorithm::kLlw, Algorithm::kWw})
    for (double lambda : {0.1, 1.0, 10.0}) {
      Trainer tr{alg, Kernel::gaussian(0.5), {}};
      tr.config.lambda = lambda;
      const auto sm = alg == Algorithm::kLlw ? StabilityModel::kLlw : StabilityModel::kWw;
      const double b = theoretical_B(tr.loss_family(2), 1.0, lambda, sm, 2);
      const auto rep = stability_scan(tr, data, b, indices, probes);
      violations += rep.violations;
      max_ratio = std::max(max_ratio, rep.max_ratio);
      unconverged += rep.base_converged ? 0 : 1;
      for (const auto& r : rep.records) unconverged += r.converged ? 0 : 1;
    }
  const double secs = seconds_since(t0);
  return {violations == 0 && secs < 300.0,
          "6 scans x 10 indices, " + std::to_string(violations) + " violations, max ratio " + fmt(max_ratio) + ", " +
              std::to_string(unconverged) + " unconverged trainings, " + fmt(secs) + " s"};
}

Dataset c67_training(const ClassConditionalModel& model, std::uint64_t seed) {
  return sample_counts(model, {40, 40, 40}, seed);
}

// Matrix bounded-differences tail for a fixed hypothesis.
Outcome c6() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto model = simplex_model(3, 2.0, 1.0);
  Trainer tr{Algorithm::kLlw, Kernel::gaussian(0.5), {}};
  tr.config.lambda = 0.1;
  const auto h = tr(c67_training(model, 1006)).hypothesis;
  const auto family = tr.loss_family(3);
  const double range = certified_range_bound(h, family, 1.0);
  auto problem = fixed_hypothesis_problem(h, family, model, labels_from_counts(std::vector<std::size_t>{40, 40, 40}),
                                          range);
  McDiarmidOptions o;
  o.trials = 10'000;
  o.grid_points = 20;
  o.seed = 2006;
  const auto r = verify_mcdiarmid(problem, o);
  std::size_t failing = 0;
  double worst = -INFINITY;
  for (const auto& row : r.rows) {
    if (!row.pass) ++failing;
    worst = std::max(worst, row.empirical - row.theoretical - 3.0 * row.standard_error);
  }
  const double secs = seconds_since(t0);
  return {r.pass && failing == 0 && r.rows.size() == 20 && r.trials == 10'000 && secs < 60.0,
          "10000 trials, " + std::to_string(r.rows.size()) + " grid points, " + std::to_string(failing) +
              " above curve + 3 SE (max excess " + fmt(worst) + "), max deviation " + fmt(r.max_deviation) +
              ", " + fmt(secs) + " s"};
}

// Deviation of the trained machine's empirical confusion from its expectation.
Outcome c7() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto model = simplex_model(3, 2.0, 1.0);
  Trainer tr{Algorithm::kLlw, Kernel::gaussian(0.5), {}};
  tr.config.lambda = 0.1;
  ConcentrationOptions o;
  o.trials = 200;
  o.delta = 0.1;
  o.holdout_per_class = 50'000;
  o.seed = 1007;
  o.kappa = 1.0;
  const auto r = concentration_experiment(tr, model, labels_from_counts(std::vector<std::size_t>{40, 40, 40}), o);
  const double secs = seconds_since(t0);
  return {r.pass() && r.records.size() == 200 && r.excluded == 0 && secs < 1800.0,
          "200 trials (" + std::to_string(r.excluded) + " unconverged), 90% quantile " + fmt(r.quantile) +
              " + slack " + fmt(r.estimation_slack) + " vs bound " + fmt(r.bound_analytic) + " (analytic M " +
              fmt(r.analytic_M) + ") and " + fmt(r.bound_empirical) + " (empirical M " + fmt(r.empirical_M) +
              "), " + fmt(secs) + " s"};
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + CONFSTAB_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return (status != -1 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
}

// Every CLI command reproduces its artifacts byte for byte.
Outcome c8() {
  const auto root = fs::temp_directory_path() / "confstab_acceptance_c8";
  fs::remove_all(root);
  fs::create_directories(root);
  Json cfg = Json::parse(R"({
    "model": {"kind": "simplex", "q": 3, "separation": 2, "sigma": 1},
    "data": {"class_counts": [12, 12, 12]},
    "learner": {"algorithm": "ww", "kernel": {"kind": "gaussian", "gamma": 0.5}, "lambda": 0.1},
    "experiment": {"seed": 8, "trials": 4, "holdout_per_class": 1000, "probe_size": 200, "index_count": 4,
                   "perturbation": "replace_one",
                   "mcdiarmid": {"trials": 500, "mean_samples": 500, "probe_count": 50}}})");

  std::vector<std::string> mismatched;
  int bad_exit = 0;
  std::size_t compared = 0;
  auto compare = [&](const std::string& name, const fs::path& a, const fs::path& b) {
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(a)) files.push_back(e.path().filename().string());
    std::size_t b_count = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(b)) ++b_count;
    if (files.empty() || b_count != files.size()) mismatched.push_back(name + "/*");
    for (const auto& f : files) {
      ++compared;
      if (!fs::exists(b / f) || read_text_file((a / f).string()) != read_text_file((b / f).string()))
        mismatched.push_back(name + "/" + f);
    }
  };
  const std::vector<std::string> commands{"train", "stability", "bound", "concentration", "mcdiarmid"};
  for (const auto& c : commands) {
    std::vector<fs::path> dirs;
    for (int rep = 0; rep < 2; ++rep) {
      const auto out = root / (c + "_" + std::to_string(rep));
      cfg["output"] = {{"dir", out.string()}};
      const auto path = root / (c + "_" + std::to_string(rep) + ".json");
      write_text_file(path.string(), cfg.dump(2));
      if (run_cli(c + " --config " + path.string(), root / "log.txt") != 0) ++bad_exit;
      dirs.push_back(out);
    }
    compare(c, dirs[0], dirs[1]);
  }
  for (int rep = 0; rep < 2; ++rep) {
    const auto out = root / ("confusion_" + std::to_string(rep));
    const auto args = "confusion --hypothesis " + (root / "train_0" / "hypothesis.json").string() + " --data " +
                      (root / "train_0" / "train_data.csv").string() + " --loss ww --out-dir " + out.string();
    if (run_cli(args, root / "log.txt") != 0) ++bad_exit;
  }
  compare("confusion", root / "confusion_0", root / "confusion_1");

  std::string detail = "6 commands, " + std::to_string(compared) + " files compared, " +
                       std::to_string(mismatched.size()) + " mismatched, " + std::to_string(bad_exit) +
                       " nonzero exits";
  for (const auto& m : mismatched) detail += " [" + m + "]";
  return {mismatched.empty() && bad_exit == 0, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"C1", c1}, {"C2", c2}, {"C3", c3}, {"C4", c4}, {"C5", c5}, {"C6", c6}, {"C7", c7}, {"C8", c8}};
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
