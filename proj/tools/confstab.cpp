// confstab: command-line front end.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "confstab/commands.hpp"
#include "confstab/error.hpp"

namespace {

constexpr const char* kFooter = R"(Output files (written to --out-dir or output.dir):
  train          hypothesis.json {q, kernel, alpha, train_points}; train_data.csv; train_summary.json
  confusion      confusion.csv (header q=<Q>, one row per true class); confusion_summary.json
  stability      stability.csv: index,class,m_q,empirical,cap,ratio; stability_summary.json
  bound          bound.json
  concentration  concentration.csv: trial,deviation,bound,flags; concentration_summary.json
                 (concentration.partial.csv holds finished trials while running; rerun to resume)
  mcdiarmid      mcdiarmid.csv: t,empirical,theoretical,stderr,pass; mcdiarmid_summary.json

Indices and class labels in files are 1-based.
Exit codes: 0 success, 2 invalid input or configuration, 3 a checked bound was violated.)";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Confusion-matrix stability experiments for multiclass kernel SVMs"};
  app.footer(kFooter);
  app.require_subcommand(1);

  confstab::CommandOptions common;
  std::uint64_t seed = 0;
  std::string out_dir;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "experiment configuration (JSON)")->required();
    sub->add_option("--seed", seed, "override experiment.seed");
    sub->add_option("--out-dir", out_dir, "override output.dir");
    sub->add_option("--jobs", common.jobs, "worker threads")->check(CLI::PositiveNumber);
  };

  auto* train = app.add_subcommand("train", "train a machine on synthetic data and save the hypothesis");
  auto* stability = app.add_subcommand("stability", "measure remove-one / replace-one loss-matrix perturbations");
  auto* bound = app.add_subcommand("bound", "evaluate the confusion-norm concentration bound");
  auto* concentration = app.add_subcommand("concentration", "Monte Carlo check of the concentration bound");
  auto* mcdiarmid = app.add_subcommand("mcdiarmid", "Monte Carlo check of the matrix bounded-differences tail");
  for (auto* sub : {train, stability, bound, concentration, mcdiarmid}) add_common(sub);

  confstab::ConfusionOptions conf;
  std::string conf_config;
  std::vector<double> prior;
  auto* confusion = app.add_subcommand("confusion", "empirical confusion matrix of a saved hypothesis");
  confusion->add_option("--hypothesis", conf.hypothesis_path, "hypothesis JSON")->required();
  confusion->add_option("--data", conf.data_path, "dataset CSV (label,x1,...)")->required();
  confusion->add_option("--loss", conf.loss, "llw | ww | zero_one")->check(CLI::IsMember({"llw", "ww", "zero_one"}));
  confusion->add_option("--prior", prior, "class prior (default: empirical)")->delimiter(',');
  confusion->add_option("--config", conf_config, "configuration providing experiment.prior");
  confusion->add_option("--out-dir", conf.out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : confstab::kExitInvalid;
  }

  if (train->count("--seed") || stability->count("--seed") || bound->count("--seed") ||
      concentration->count("--seed") || mcdiarmid->count("--seed"))
    common.seed = seed;
  if (!out_dir.empty()) common.out_dir = out_dir;
  if (!prior.empty()) conf.prior = prior;
  if (!conf_config.empty()) conf.config_path = conf_config;

  try {
    if (*train) return confstab::cmd_train(common, std::cout);
    if (*confusion) return confstab::cmd_confusion(conf, std::cout);
    if (*stability) return confstab::cmd_stability(common, std::cout);
    if (*bound) return confstab::cmd_bound(common, std::cout);
    if (*concentration) return confstab::cmd_concentration(common, std::cout);
    if (*mcdiarmid) return confstab::cmd_mcdiarmid(common, std::cout);
  } catch (const confstab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return confstab::kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return confstab::kExitInvalid;
  }
  return confstab::kExitInvalid;
}
