#include "confstab/config.hpp"

#include <cmath>
#include <set>

#include "confstab/error.hpp"
#include "confstab/io.hpp"

namespace confstab {

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) { throw ConfigError(field, what); }

void reject_unknown(const Json& j, const std::string& field, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(field, "expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) fail(field + "." + it.key(), "unknown key");
}

const Json* find(const Json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double number(const Json& j, const std::string& field) {
  if (!j.is_number()) fail(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(field, "must be finite");
  return v;
}

double positive(const Json& j, const std::string& field) {
  const double v = number(j, field);
  if (!(v > 0.0)) fail(field, "must be > 0");
  return v;
}

std::size_t count(const Json& j, const std::string& field, std::size_t min = 0) {
  if (!j.is_number_integer() && !(j.is_number() && std::floor(j.get<double>()) == j.get<double>()))
    fail(field, "expected an integer");
  const double v = j.get<double>();
  if (v < static_cast<double>(min)) fail(field, "must be >= " + std::to_string(min));
  return static_cast<std::size_t>(v);
}

std::string text(const Json& j, const std::string& field) {
  if (!j.is_string()) fail(field, "expected a string");
  return j.get<std::string>();
}

std::vector<double> numbers(const Json& j, const std::string& field) {
  if (!j.is_array()) fail(field, "expected an array");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(number(j[k], field + "[" + std::to_string(k) + "]"));
  return out;
}

PriorVector prior_from(const Json& j, const std::string& field, int q) {
  auto pi = numbers(j, field);
  if (pi.size() != static_cast<std::size_t>(q)) fail(field, "expected " + std::to_string(q) + " entries");
  try {
    return PriorVector(std::move(pi));
  } catch (const InvalidInputError& e) {
    fail(field, e.what());
  }
}

ClassConditionalModel parse_model(const Json& j) {
  const std::string f = "model";
  if (!j.is_object()) fail(f, "expected an object");
  const std::string kind = find(j, "kind") ? text(j["kind"], f + ".kind") : "simplex";
  if (!find(j, "q")) fail(f + ".q", "missing");
  const auto q = static_cast<int>(count(j["q"], f + ".q", 2));
  if (kind == "simplex") {
    reject_unknown(j, f, {"kind", "q", "separation", "sigma", "dimension", "priors"});
    const double sep = find(j, "separation") ? number(j["separation"], f + ".separation") : 2.0;
    const double sigma = find(j, "sigma") ? number(j["sigma"], f + ".sigma") : 1.0;
    if (sep < 0.0) fail(f + ".separation", "must be >= 0");
    if (sigma < 0.0) fail(f + ".sigma", "must be >= 0");
    auto model = simplex_model(q, sep, sigma,
                               find(j, "priors") ? prior_from(j["priors"], f + ".priors", q) : PriorVector::uniform(q));
    if (find(j, "dimension")) {
      const std::size_t d = count(j["dimension"], f + ".dimension", 1);
      if (d < static_cast<std::size_t>(q - 1)) fail(f + ".dimension", "must be at least Q - 1");
      // Extra coordinates are pure noise shared by every class.
      for (auto& mu : model.means) mu.resize(d, 0.0);
      for (auto& sd : model.stddevs) sd.resize(d, sigma);
    }
    return model;
  }
  if (kind == "explicit") {
    reject_unknown(j, f, {"kind", "q", "means", "stddevs", "priors"});
    Json copy = j;
    if (!find(j, "priors")) copy["priors"] = PriorVector::uniform(q).values();
    try {
      return model_from_json(copy, f);
    } catch (const InvalidInputError& e) {
      fail(f, e.what());
    }
  }
  fail(f + ".kind", "unknown model kind '" + kind + "' (simplex | explicit)");
}

DataSpec parse_data(const Json& j, int q) {
  const std::string f = "data";
  reject_unknown(j, f, {"class_counts", "m"});
  DataSpec d;
  if (find(j, "class_counts")) {
    const auto& cc = j["class_counts"];
    if (!cc.is_array() || cc.size() != static_cast<std::size_t>(q))
      fail(f + ".class_counts", "expected " + std::to_string(q) + " counts");
    for (std::size_t k = 0; k < cc.size(); ++k)
      d.class_counts.push_back(count(cc[k], f + ".class_counts[" + std::to_string(k) + "]"));
    std::size_t total = 0;
    for (auto c : d.class_counts) total += c;
    if (total == 0) fail(f + ".class_counts", "need at least one sample");
  } else if (find(j, "m")) {
    d.m = count(j["m"], f + ".m", 1);
  } else {
    fail(f, "need class_counts or m");
  }
  return d;
}

Trainer parse_learner(const Json& j) {
  const std::string f = "learner";
  reject_unknown(j, f, {"algorithm", "kernel", "lambda", "optimizer", "max_iters", "tolerance", "step_scale",
                        "kink_tolerance"});
  Trainer t;
  if (find(j, "algorithm")) {
    const auto a = text(j["algorithm"], f + ".algorithm");
    if (a != "llw" && a != "ww") fail(f + ".algorithm", "expected 'llw' or 'ww'");
    t.algorithm = algorithm_from_key(a);
  }
  if (find(j, "kernel")) t.kernel = kernel_from_json(j["kernel"], f + ".kernel");
  if (!find(j, "lambda")) fail(f + ".lambda", "missing");
  t.config.lambda = positive(j["lambda"], f + ".lambda");
  if (find(j, "optimizer")) {
    const auto o = text(j["optimizer"], f + ".optimizer");
    if (o == "newton") {
      t.config.optimizer = Optimizer::kSmoothedNewton;
    } else if (o == "subgradient") {
      t.config.optimizer = Optimizer::kSubgradient;
    } else {
      fail(f + ".optimizer", "expected 'newton' or 'subgradient'");
    }
  }
  if (find(j, "max_iters")) t.config.max_iters = static_cast<int>(count(j["max_iters"], f + ".max_iters", 1));
  if (find(j, "tolerance")) t.config.tolerance = positive(j["tolerance"], f + ".tolerance");
  if (find(j, "step_scale")) t.config.step_scale = positive(j["step_scale"], f + ".step_scale");
  if (find(j, "kink_tolerance")) t.config.kink_tolerance = positive(j["kink_tolerance"], f + ".kink_tolerance");
  return t;
}

ExperimentSpec parse_experiment(const Json& j, int q) {
  const std::string f = "experiment";
  reject_unknown(j, f, {"seed", "trials", "delta", "holdout_per_class", "probe_size", "indices", "index_count",
                        "perturbation", "strict_proof_constant", "kappa", "prior", "mcdiarmid"});
  ExperimentSpec e;
  if (find(j, "seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
      fail(f + ".seed", "expected a nonnegative integer");
    e.seed = j["seed"].get<std::uint64_t>();
  }
  if (find(j, "trials")) e.trials = count(j["trials"], f + ".trials");
  if (find(j, "delta")) {
    e.delta = number(j["delta"], f + ".delta");
    if (!(e.delta > 0.0 && e.delta < 1.0)) fail(f + ".delta", "must lie in (0, 1)");
  }
  if (find(j, "holdout_per_class")) e.holdout_per_class = count(j["holdout_per_class"], f + ".holdout_per_class", 1);
  if (find(j, "probe_size")) e.probe_size = count(j["probe_size"], f + ".probe_size");
  if (find(j, "indices")) {
    const auto& idx = j["indices"];
    if (!idx.is_array()) fail(f + ".indices", "expected an array");
    for (std::size_t k = 0; k < idx.size(); ++k)
      e.indices.push_back(count(idx[k], f + ".indices[" + std::to_string(k) + "]", 1) - 1);
  }
  if (find(j, "index_count")) e.index_count = count(j["index_count"], f + ".index_count");
  if (find(j, "perturbation")) {
    const auto p = text(j["perturbation"], f + ".perturbation");
    if (p == "remove_one") {
      e.perturbation = PerturbationMode::kRemoveOne;
    } else if (p == "replace_one") {
      e.perturbation = PerturbationMode::kReplaceOne;
    } else {
      fail(f + ".perturbation", "expected 'remove_one' or 'replace_one'");
    }
  }
  if (find(j, "strict_proof_constant")) {
    if (!j["strict_proof_constant"].is_boolean()) fail(f + ".strict_proof_constant", "expected a boolean");
    e.strict_proof_constant = j["strict_proof_constant"].get<bool>();
  }
  if (find(j, "kappa")) {
    e.kappa = number(j["kappa"], f + ".kappa");
    if (*e.kappa < 0.0) fail(f + ".kappa", "must be >= 0");
  }
  if (find(j, "prior")) e.prior = prior_from(j["prior"], f + ".prior", q).values();
  if (find(j, "mcdiarmid")) {
    const auto& mj = j["mcdiarmid"];
    const std::string mf = f + ".mcdiarmid";
    reject_unknown(mj, mf, {"trials", "mean_samples", "probe_count", "grid_points", "functional"});
    auto& m = e.mcdiarmid;
    if (find(mj, "trials")) m.trials = count(mj["trials"], mf + ".trials", 1);
    if (find(mj, "mean_samples")) m.mean_samples = count(mj["mean_samples"], mf + ".mean_samples", 1);
    if (find(mj, "probe_count")) m.probe_count = count(mj["probe_count"], mf + ".probe_count");
    if (find(mj, "grid_points")) m.grid_points = count(mj["grid_points"], mf + ".grid_points", 1);
    if (find(mj, "functional")) {
      m.functional = text(mj["functional"], mf + ".functional");
      if (m.functional != "confusion" && m.functional != "constant")
        fail(mf + ".functional", "expected 'confusion' or 'constant'");
    }
  }
  return e;
}

}  // namespace

double ExperimentConfig::kappa() const {
  if (experiment.kappa) return *experiment.kappa;
  try {
    return confstab::kappa(trainer.kernel);
  } catch (const UnboundedKernelError&) {
    fail("experiment.kappa", "required for kernels that are unbounded on the data domain");
  }
}

ExperimentConfig parse_config(const Json& j) {
  reject_unknown(j, "config", {"model", "data", "learner", "experiment", "output"});
  ExperimentConfig c;
  if (!find(j, "model")) fail("model", "missing");
  c.model = parse_model(j["model"]);
  if (!find(j, "data")) fail("data", "missing");
  c.data = parse_data(j["data"], c.model.q);
  if (!find(j, "learner")) fail("learner", "missing");
  c.trainer = parse_learner(j["learner"]);
  if (find(j, "experiment")) c.experiment = parse_experiment(j["experiment"], c.model.q);
  if (find(j, "output")) {
    reject_unknown(j["output"], "output", {"dir"});
    if (find(j["output"], "dir")) c.output_dir = text(j["output"]["dir"], "output.dir");
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  const std::string body = read_text_file(path);
  Json j;
  try {
    j = Json::parse(body);
  } catch (const Json::parse_error& e) {
    // nlohmann reports a byte offset; convert it to a line number.
    const std::size_t off = std::min<std::size_t>(e.byte, body.size());
    std::size_t line = 1;
    for (std::size_t k = 0; k + 1 < off; ++k)
      if (body[k] == '\n') ++line;
    throw ParseError(path, line, "invalid JSON");
  }
  return parse_config(j);
}

}  // namespace confstab
