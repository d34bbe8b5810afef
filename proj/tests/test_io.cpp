#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <random>

#include "confstab/config.hpp"
#include "confstab/error.hpp"
#include "confstab/io.hpp"
#include "oracles.hpp"

using namespace confstab;

TEST_CASE("doubles round-trip through text") {
  std::mt19937_64 rng(71);
  for (int t = 0; t < 1000; ++t) {
    const double v = oracle::uniform(rng, -1, 1) * std::pow(10.0, oracle::uniform_int(rng, -300, 300));
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(format_double(-0.0) == "0");
  CHECK(format_double(1.0) == "1");
}

TEST_CASE("matrix CSV and JSON") {
  const Matrix m = Matrix::from_rows({{0, 0.1, 1e-17}, {2.5, 0, 3}, {1.0 / 3.0, 7, 0}});
  const auto csv = matrix_to_csv(m);
  CHECK(csv.rfind("q=3\n", 0) == 0);
  CHECK(matrix_from_csv(csv) == m);
  CHECK(matrix_from_json(matrix_to_json(m)) == m);
  CHECK(matrix_to_json(m)["q"] == 3);

  try {
    matrix_from_csv("q=2\n0,1\n0,x\n", "m.csv");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(matrix_from_csv("2\n0,1\n1,0\n"), ParseError);
  CHECK_THROWS_AS(matrix_from_csv("q=2\n0,1\n"), ParseError);
  CHECK_THROWS_AS(matrix_from_csv("q=2\n0,1,2\n1,0\n"), ParseError);
}

TEST_CASE("dataset CSV") {
  Dataset d{3, {{0.5, -1.0}, {1e-9, 2.0}, {3.25, 0.0}}, {0, 2, 1}};
  const auto csv = dataset_to_csv(d);
  CHECK(csv.find("\n3,") != std::string::npos);  // 1-based labels on disk
  const auto back = dataset_from_csv(csv, 3);
  CHECK(back.points == d.points);
  CHECK(back.labels == d.labels);
  CHECK(dataset_from_csv(csv).q == 3);

  try {
    dataset_from_csv("label,x1\n1,0.5\n2,abc\n", 2, "d.csv");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("d.csv:3") != std::string::npos);
  }
  CHECK_THROWS_AS(dataset_from_csv("label,x1\n0,1\n", 2), ParseError);
  CHECK_THROWS_AS(dataset_from_csv("label,x1\n3,1\n", 2), ParseError);
  CHECK_THROWS_AS(dataset_from_csv("label,x1\n1,1,2\n", 2), ParseError);
  CHECK_THROWS_AS(dataset_from_csv("y,x1\n1,1\n", 2), ParseError);
}

TEST_CASE("hypothesis JSON round-trip") {
  std::mt19937_64 rng(73);
  const std::vector<FeatureVector> pts{{0.1, 0.2}, {-1.0, 3.0}, {2.0, 2.0}};
  for (const auto& k : {Kernel::gaussian(0.37), Kernel::linear(), Kernel::polynomial(3, 0.5)}) {
    KernelHypothesis h(k, oracle::random_matrix(rng, 3, 3), pts);
    const auto j = hypothesis_to_json(h);
    CHECK(j.size() == 4);
    for (const char* key : {"q", "kernel", "alpha", "train_points"}) CHECK(j.contains(key));
    const auto back = hypothesis_from_json(Json::parse(j.dump()));
    CHECK(back.alpha() == h.alpha());
    CHECK(back.train_points() == h.train_points());
    CHECK(back.kernel() == h.kernel());
  }
  Json bad = hypothesis_to_json(KernelHypothesis(Kernel::linear(), Matrix(2, 3), pts));
  bad["alpha"][0].push_back(1.0);
  CHECK_THROWS_AS(hypothesis_from_json(bad), ParseError);
}

TEST_CASE("model JSON round-trip") {
  const auto m = simplex_model(3, 2.0, 0.5, PriorVector({0.2, 0.3, 0.5}));
  const auto back = model_from_json(model_to_json(m));
  CHECK(back.means == m.means);
  CHECK(back.stddevs == m.stddevs);
  CHECK(back.priors.values() == m.priors.values());
}

TEST_CASE("report tables pass their own schema checks") {
  StabilityReport s;
  s.records.push_back({4, 1, 20, 0.01, 0.05, 0.2, true});
  const auto sc = stability_csv(s);
  CHECK(sc == "index,class,m_q,empirical,cap,ratio\n5,2,20,0.01,0.050000000000000003,0.20000000000000001\n");
  CHECK_NOTHROW(check_csv(sc, {"index", "class", "m_q", "empirical", "cap", "ratio"}, std::vector<bool>(6, true), "s"));

  std::vector<TrialRecord> trials{{0, 0.2, 0.01, 1.5, true, 3.0}, {1, 9.0, 0.01, 1.5, false, 3.0}};
  const auto cc = concentration_csv(trials, 5.0);
  CHECK(cc == "trial,deviation,bound,flags\n0,0.20000000000000001,5,converged\n1,9,5,not_converged;exceeds_bound\n");
  CHECK_THROWS_AS(check_csv(cc, {"trial", "deviation", "bound", "flags"}, {true, true, true, true}, "c"), ParseError);

  std::string log = trial_log_header();
  for (const auto& t : trials) log += trial_log_row(t);
  const auto parsed = trial_log_from_csv(log + "2,0.5,0.0", "log");  // torn last line dropped
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[1].deviation == 9.0);
  CHECK(!parsed[1].converged);
  CHECK(parsed[0].objective == 3.0);
}

TEST_CASE("files are written atomically and read back") {
  const auto dir = std::filesystem::temp_directory_path() / "confstab_io_test";
  std::filesystem::remove_all(dir);
  const auto path = (dir / "sub" / "x.txt").string();
  write_text_file(path, "hello\n");
  CHECK(read_text_file(path) == "hello\n");
  CHECK(!std::filesystem::exists(path + ".tmp"));
  CHECK_THROWS_AS(read_text_file((dir / "missing").string()), InvalidInputError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("config parsing and field-named errors") {
  const Json good = Json::parse(R"({
    "model": {"kind": "simplex", "q": 3, "separation": 2, "sigma": 1, "dimension": 4},
    "data": {"class_counts": [5, 5, 5]},
    "learner": {"algorithm": "ww", "kernel": {"kind": "gaussian", "gamma": 0.5}, "lambda": 0.1,
                "optimizer": "subgradient"},
    "experiment": {"seed": 9, "indices": [1, 3], "perturbation": "replace_one", "prior": [0.2, 0.3, 0.5]},
    "output": {"dir": "here"}})");
  const auto c = parse_config(good);
  CHECK(c.model.dimension() == 4);
  CHECK(c.trainer.algorithm == Algorithm::kWw);
  CHECK(c.trainer.config.optimizer == Optimizer::kSubgradient);
  CHECK(c.experiment.indices == std::vector<std::size_t>{0, 2});
  CHECK(c.experiment.perturbation == PerturbationMode::kReplaceOne);
  CHECK(c.output_dir == "here");
  CHECK(c.kappa() == 1.0);

  auto expect_field = [&](Json j, const std::string& field) {
    try {
      parse_config(j);
      FAIL("expected a config error for " << field);
    } catch (const ConfigError& e) {
      CHECK(e.field() == field);
    }
  };
  Json j = good;
  j["learner"]["lambda"] = 0;
  expect_field(j, "learner.lambda");
  j = good;
  j["learner"].erase("lambda");
  expect_field(j, "learner.lambda");
  j = good;
  j["experiment"]["delta"] = 1.5;
  expect_field(j, "experiment.delta");
  j = good;
  j["model"]["q"] = 1;
  expect_field(j, "model.q");
  j = good;
  j["data"]["class_counts"] = {1, 2};
  expect_field(j, "data.class_counts");
  j = good;
  j["learner"]["kernel"] = {{"kind", "rbf"}};
  expect_field(j, "learner.kernel.kind");
  j = good;
  j["learner"]["kernel"] = {{"kind", "gaussian"}, {"gamma", -1}};
  expect_field(j, "learner.kernel");
  j = good;
  j["learner"]["typo"] = 1;
  expect_field(j, "learner.typo");
  j = good;
  j["learner"]["kernel"] = {{"kind", "linear"}};
  CHECK_THROWS_AS(parse_config(j).kappa(), ConfigError);
  j["experiment"]["kappa"] = 3.0;
  CHECK(parse_config(j).kappa() == 3.0);
}
