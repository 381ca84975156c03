// Exercises the shared library through the C header only.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include "doctest.h"
#include "sepagg/sepagg.h"

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  sepagg_string_free(s);
  return out;
}

}  // namespace

TEST_SUITE("capi") {

TEST_CASE("version and errors") {
  CHECK(std::string(sepagg_version()) == "0.1.0");
  sepagg_transition* t = nullptr;
  CHECK(sepagg_transition_symmetric(1.5, 2, &t) == SEPAGG_ERR_DOMAIN);
  CHECK(t == nullptr);
  CHECK(std::string(sepagg_last_error()).find("epsilon") != std::string::npos);
  CHECK(sepagg_transition_symmetric(0.2, 2, nullptr) == SEPAGG_ERR_INVALID_ARGUMENT);
  CHECK(sepagg_transition_symmetric(0.2, 2, &t) == SEPAGG_OK);
  CHECK(std::string(sepagg_last_error()).empty());
  sepagg_transition_free(t);
  sepagg_transition_free(nullptr);
  sepagg_dataset_free(nullptr);
}

TEST_CASE("transition handles") {
  sepagg_transition *t = nullptr, *agg = nullptr, *mc = nullptr;
  REQUIRE(sepagg_transition_binary(0.2, 0.2, &t) == SEPAGG_OK);
  REQUIRE(sepagg_transition_aggregate_majority(t, 3, &agg) == SEPAGG_OK);
  double v = 0;
  REQUIRE(sepagg_transition_get(agg, 1, 0, &v) == SEPAGG_OK);
  CHECK(std::abs(v - 0.104) < 1e-12);
  CHECK(sepagg_transition_get(agg, 2, 0, &v) == SEPAGG_ERR_INVALID_ARGUMENT);
  REQUIRE(sepagg_transition_aggregate_mc(t, 3, 200000, 1, &mc) == SEPAGG_OK);
  REQUIRE(sepagg_transition_get(mc, 1, 0, &v) == SEPAGG_OK);
  CHECK(std::abs(v - 0.104) < 0.005);
  sepagg_transition* bad = nullptr;
  CHECK(sepagg_transition_aggregate_majority(t, 4, &bad) == SEPAGG_ERR_DOMAIN);
  double inv[4];
  REQUIRE(sepagg_transition_inverse(t, inv) == SEPAGG_OK);
  CHECK(inv[0] == doctest::Approx(0.8 / 0.6));
  double lam = 0;
  REQUIRE(sepagg_transition_min_eigenvalue(t, &lam) == SEPAGG_OK);
  CHECK(lam == doctest::Approx(0.6));
  sepagg_transition* sing = nullptr;
  REQUIRE(sepagg_transition_binary(0.5, 0.5, &sing) == SEPAGG_OK);
  CHECK(sepagg_transition_inverse(sing, inv) == SEPAGG_ERR_SINGULAR);
  const double rows[9] = {0.8, 0.1, 0.1, 0.1, 0.8, 0.1, 0.1, 0.1, 0.8};
  sepagg_transition* t3 = nullptr;
  REQUIRE(sepagg_transition_from_rows(3, rows, &t3) == SEPAGG_OK);
  CHECK(sepagg_transition_classes(t3) == 3);
  for (auto* p : {t, agg, mc, sing, t3}) sepagg_transition_free(p);
}

TEST_CASE("advise") {
  sepagg_problem p;
  sepagg_problem_init(&p);
  p.rho0 = p.rho1 = 0.4;
  p.k = 3;
  p.n = 2000;
  p.vc_dim = 10;
  int separate = -1;
  char* report = nullptr;
  REQUIRE(sepagg_advise(&p, SEPAGG_LOSS_CE, &separate, &report) == SEPAGG_OK);
  CHECK(separate == 0);
  const std::string json = take(report);
  CHECK(json.find("\"direct_comparison\"") != std::string::npos);
  p.delta = 1.5;
  CHECK(sepagg_advise(&p, SEPAGG_LOSS_CE, &separate, nullptr) == SEPAGG_ERR_DOMAIN);
  p.delta = 0.05;
  p.rho0 = p.rho1 = 0.5;
  CHECK(sepagg_advise(&p, SEPAGG_LOSS_BACKWARD, &separate, nullptr) == SEPAGG_ERR_SINGULAR);
}

TEST_CASE("dataset pipeline") {
  const auto dir = std::filesystem::temp_directory_path();
  const std::string data_path = (dir / "sepagg_capi_data.csv").string();
  const std::string agg_path = (dir / "sepagg_capi_agg.csv").string();
  sepagg_dataset* ds = nullptr;
  REQUIRE(sepagg_dataset_gen_blobs(2, 400, 3, 2.0, 1, &ds) == SEPAGG_OK);
  CHECK(sepagg_dataset_rows(ds) == 400);
  CHECK(sepagg_dataset_dim(ds) == 3);
  REQUIRE(sepagg_dataset_annotate(ds, SEPAGG_NOISE_SYMMETRIC, 0.2, 3, 5) == SEPAGG_OK);
  CHECK(sepagg_dataset_annotators(ds) == 3);
  REQUIRE(sepagg_dataset_save_csv(ds, data_path.c_str()) == SEPAGG_OK);

  char* metrics = nullptr;
  REQUIRE(sepagg_train(ds, R"({"loss":"bw","treatment":"sep","epsilon":0.2,"epochs":3})", &metrics) == SEPAGG_OK);
  CHECK(take(metrics).find("best_test_accuracy") != std::string::npos);
  CHECK(sepagg_train(ds, R"({"loss":"bw"})", &metrics) == SEPAGG_ERR_DOMAIN);
  CHECK(sepagg_train(ds, R"({"lossy":"ce"})", &metrics) == SEPAGG_ERR_PARSE);
  CHECK(sepagg_train(ds, "{", &metrics) == SEPAGG_ERR_PARSE);

  sepagg_dataset* loaded = nullptr;
  REQUIRE(sepagg_dataset_load_csv(data_path.c_str(), 0, &loaded) == SEPAGG_OK);
  char* diag = nullptr;
  REQUIRE(sepagg_dataset_aggregate(loaded, SEPAGG_METHOD_EM, &diag) == SEPAGG_OK);
  CHECK(take(diag).find("log_likelihood") != std::string::npos);
  REQUIRE(sepagg_dataset_save_csv(loaded, agg_path.c_str()) == SEPAGG_OK);
  sepagg_dataset* again = nullptr;
  REQUIRE(sepagg_dataset_load_csv(agg_path.c_str(), 0, &again) == SEPAGG_OK);
  CHECK(sepagg_dataset_rows(again) == 400);

  CHECK(sepagg_dataset_load_csv("/nonexistent/x.csv", 0, &again) == SEPAGG_ERR_IO);
  sepagg_dataset_free(ds);
  sepagg_dataset_free(loaded);
  sepagg_dataset_free(again);
  std::remove(data_path.c_str());
  std::remove(agg_path.c_str());
}

TEST_CASE("figures") {
  char* csv = nullptr;
  REQUIRE(sepagg_figure_csv(2, 0, &csv) == SEPAGG_OK);
  CHECK(take(csv).rfind("delta,k,eta\n", 0) == 0);
  CHECK(sepagg_figure_csv(4, 0, &csv) == SEPAGG_ERR_INVALID_ARGUMENT);
}

}  // TEST_SUITE
