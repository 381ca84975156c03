#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "sepagg/error.hpp"
#include "sepagg/experiment.hpp"
#include "sepagg/report.hpp"

using namespace sepagg;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig small_config() {
  return ExperimentConfig::from_json(nlohmann::json::parse(R"({
    "dataset": {"type": "blobs", "m": 2, "n": 300, "dim": 3, "separation": 2.0},
    "k_values": [1, 3],
    "epsilon_values": [0.2],
    "losses": ["ce", "bw"],
    "treatments": ["sep", "mv", "em"],
    "seeds": [0, 1],
    "train": {"epochs": 3}
  })"));
}

}  // namespace

TEST_SUITE("cli_experiments") {

TEST_CASE("config parsing") {
  const auto c = small_config();
  CHECK(c.k_values == std::vector<int>{1, 3});
  CHECK(c.train.epochs == 3);
  CHECK(std::get<BlobsSource>(c.dataset).n == 300);
  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::parse(R"({"k_valus": [1]})")), ParseError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::parse(R"({"losses": ["xx"]})")), ParseError);
  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::parse(R"({"k_values": "3"})")), ParseError);
  ExperimentConfig empty;
  CHECK_THROWS_AS(empty.validate(), DomainError);
  auto dup = small_config();
  dup.seeds = {0, 1, 0};
  CHECK_THROWS_AS(dup.validate(), DomainError);
  dup = small_config();
  dup.k_values = {3, 3};
  CHECK_THROWS_AS(dup.validate(), DomainError);
}

TEST_CASE("sweep shape, summary rule, determinism") {
  const auto c = small_config();
  const auto r = run_experiment(c);
  CHECK(r.rows.size() == 2 * 1 * 2 * 3 * 2);
  CHECK(r.failures == 0);
  CHECK(r.summary.size() == 2 * 1 * 2);
  for (const auto& s : r.summary) {
    REQUIRE(s.majority_vote.has_value());
    REQUIRE(s.em.has_value());
    CHECK(*s.aggregate_best == std::max(*s.majority_vote, *s.em));
    double sep = 0, mv = 0;
    for (const auto& row : r.rows)
      if (row.k == s.k && row.loss == s.loss) {
        if (row.treatment == TrainTreatment::separate) sep += row.best_test_accuracy / 2;
        if (row.treatment == TrainTreatment::majority_vote) mv += row.best_test_accuracy / 2;
      }
    CHECK(*s.separate == doctest::Approx(sep).epsilon(1e-15));
    CHECK(*s.majority_vote == doctest::Approx(mv).epsilon(1e-15));
  }
  std::ostringstream a, b;
  write_sweep_csv(r, a);
  write_sweep_csv(run_experiment(c), b);
  CHECK(a.str() == b.str());

  auto threaded = c;
  threaded.threads = 3;
  std::ostringstream t;
  write_sweep_csv(run_experiment(threaded), t);
  CHECK(t.str() == a.str());
}

TEST_CASE("failed runs are recorded and the sweep continues") {
  auto c = small_config();
  c.k_values = {2};
  c.losses = {LossFamily::peer};
  c.treatments = {TrainTreatment::separate};
  c.train.learning_rate = 1e200;
  const auto r = run_experiment(c);
  CHECK(r.failures == r.rows.size());
  for (const auto& row : r.rows) CHECK_FALSE(row.error.empty());
  std::ostringstream out;
  write_sweep_csv(r, out);
  CHECK(out.str().find("non-finite") != std::string::npos);
}

TEST_CASE("output files") {
  const auto dir = std::filesystem::temp_directory_path() / "sepagg_test_experiment";
  std::filesystem::remove_all(dir);
  auto c = small_config();
  c.k_values = {3};
  c.losses = {LossFamily::ce};
  const auto r = run_experiment(c);
  write_experiment_outputs(r, dir);
  const auto sweep = slurp(dir / "sweep.csv");
  CHECK(sweep.rfind("k,epsilon,loss,treatment,seed,best_test_accuracy,final_test_accuracy,error\n", 0) == 0);
  CHECK(slurp(dir / "summary.csv").rfind("k,epsilon,loss,separate,majority_vote,em,aggregate_best,winner\n", 0) == 0);
  CHECK(std::filesystem::exists(dir / "timing.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("figure csv") {
  std::ostringstream f1;
  write_figure1_csv(default_figure1(), f1);
  std::istringstream in(f1.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "epsilon,k,aggregated_rate");
  bool found = false;
  while (std::getline(in, line))
    if (line.rfind("0.2,3,", 0) == 0) {
      found = true;
      CHECK(std::abs(std::stod(line.substr(6)) - 0.104) <= 1e-12);
    }
  CHECK(found);
  std::ostringstream f3;
  write_figure3_csv(default_figure3(LhsForm::exact), f3);
  CHECK(f3.str().find("ce,0.2,3,\n") != std::string::npos);
}

TEST_CASE("json reports") {
  ProblemSpec s;
  s.k = 3;
  s.n = 2000;
  s.vc_dim = 10;
  s.t_base = TransitionMatrix::binary(0.4, 0.4);
  const auto j = to_json(decide(s, LossFamily::ce));
  CHECK(j["recommendation"] == "aggregate");
  CHECK(j["via"] == "direct_comparison");
  CHECK(j["lhs"].is_null());
  CHECK(j["separate"]["shift"].get<double>() == doctest::Approx(0.4));
  Metrics m;
  m.epoch_loss = {1.0, 0.5};
  m.best_test_accuracy = 0.75;
  CHECK(to_json(m)["best_test_accuracy"] == 0.75);
  CHECK(parse_loss_family("bw") == LossFamily::backward);
  CHECK_THROWS_AS(parse_loss_family("mse"), DomainError);
}

}  // TEST_SUITE
