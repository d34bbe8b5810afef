#pragma once

// JSON experiment configuration shared by every CLI command. Validation
// happens up front and failures name the offending field ("learner.lambda").
//
// {
//   "model":   {"kind": "simplex", "q": 3, "separation": 2, "sigma": 1,
//               "dimension": 2, "priors": [...]}
//            | {"kind": "explicit", "q": 2, "means": [[..]], "stddevs": [[..]], "priors": [..]},
//   "data":    {"class_counts": [40, 40, 40]} | {"m": 120},
//   "learner": {"algorithm": "llw", "kernel": {"kind": "gaussian", "gamma": 0.5},
//               "lambda": 0.1, "optimizer": "newton", "max_iters": 20000,
//               "tolerance": 1e-6, "step_scale": 1, "kink_tolerance": 1e-6},
//   "experiment": {"seed": 1, "trials": 200, "delta": 0.1, "holdout_per_class": 50000,
//                  "probe_size": 2000, "indices": [1, 2], "index_count": 10,
//                  "perturbation": "remove_one", "strict_proof_constant": false,
//                  "kappa": 1, "prior": [..],
//                  "mcdiarmid": {"trials": 10000, "mean_samples": 20000, "probe_count": 500,
//                                "grid_points": 20, "functional": "confusion"}},
//   "output":  {"dir": "out"}
// }

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "confstab/stability.hpp"
#include "confstab/synth.hpp"

namespace confstab {

struct DataSpec {
  std::vector<std::size_t> class_counts;  // fixed label sequence (labels in class order)
  std::size_t m = 0;                      // otherwise m joint draws
};

struct McDiarmidSpec {
  std::size_t trials = 10'000;
  std::size_t mean_samples = 20'000;
  std::size_t probe_count = 500;
  std::size_t grid_points = 20;
  std::string functional = "confusion";  // "confusion" | "constant"
};

struct ExperimentSpec {
  std::uint64_t seed = 0;
  std::size_t trials = 200;
  double delta = 0.1;
  std::size_t holdout_per_class = 50'000;
  std::size_t probe_size = 2'000;
  std::vector<std::size_t> indices;  // 0-based after parsing (1-based in JSON)
  std::size_t index_count = 10;      // used when indices is empty
  PerturbationMode perturbation = PerturbationMode::kRemoveOne;
  bool strict_proof_constant = false;
  std::optional<double> kappa;
  std::optional<std::vector<double>> prior;
  McDiarmidSpec mcdiarmid;
};

struct ExperimentConfig {
  ClassConditionalModel model;
  DataSpec data;
  Trainer trainer;
  ExperimentSpec experiment;
  std::string output_dir = "out";

  // Kappa for bounds: experiment.kappa or the kernel's own bound.
  double kappa() const;
};

// Throws ConfigError naming the field.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

}  // namespace confstab
