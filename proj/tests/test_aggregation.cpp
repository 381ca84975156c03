#include <cmath>
#include <numeric>

#include "doctest.h"
#include "sepagg/aggregation.hpp"
#include "sepagg/error.hpp"
#include "sepagg/rng.hpp"
#include "sepagg/transition.hpp"

using namespace sepagg;

namespace {

LabelMatrix heterogeneous_panel(const std::vector<int>& clean, const std::vector<double>& acc, std::uint64_t seed) {
  std::vector<TransitionMatrix> ms;
  for (double a : acc) ms.push_back(make_symmetric(1.0 - a, 2));
  return sample_noisy_labels(clean, AnnotatorPanel(ms), seed);
}

double label_accuracy(const std::vector<int>& a, const std::vector<int>& b) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < a.size(); ++i) hit += a[i] == b[i];
  return static_cast<double>(hit) / a.size();
}

void check_posteriors(const AggregationResult& r) {
  const std::size_t n = r.labels.size();
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    std::vector<double> row;
    for (int c = 0; c < r.classes; ++c) {
      s += r.posterior(i, c);
      row.push_back(r.posterior(i, c));
    }
    CHECK(std::abs(s - 1.0) <= 1e-9);
    CHECK(r.labels[i] == argmax_smallest(row));
  }
}

}  // namespace

TEST_SUITE("aggregation") {

TEST_CASE("majority_vote examples") {
  const LabelMatrix a(1, 3, 2, {1, 1, 0});
  CHECK(majority_vote(a).labels[0] == 1);
  const LabelMatrix tie(1, 2, 2, {0, 1});
  CHECK(majority_vote(tie).labels[0] == 0);
  const LabelMatrix tie_rev(1, 2, 2, {1, 0});
  CHECK(majority_vote(tie_rev).labels[0] == 0);
  const LabelMatrix tie3(1, 4, 3, {2, 1, 2, 1});
  CHECK(majority_vote(tie3).labels[0] == 1);
  const auto r = majority_vote(LabelMatrix(1, 4, 3, {2, 2, 0, 2}));
  CHECK(r.posterior(0, 2) == doctest::Approx(0.75));
  CHECK(r.posterior(0, 0) == doctest::Approx(0.25));
  CHECK(r.posterior(0, 1) == 0.0);
  CHECK_THROWS_AS(majority_vote(LabelMatrix(0, 3, 2)), DomainError);
  CHECK_THROWS_AS(majority_vote(LabelMatrix(3, 0, 2)), DomainError);
}

TEST_CASE("majority_vote disagreement matches the aggregated noise rate") {
  std::vector<int> clean(100000);
  for (std::size_t i = 0; i < clean.size(); ++i) clean[i] = static_cast<int>(i % 2);
  const auto lm = sample_noisy_labels(clean, AnnotatorPanel::identical(make_symmetric(0.2, 2), 3), 21);
  const auto r = majority_vote(lm);
  CHECK(std::abs((1.0 - label_accuracy(r.labels, clean)) - 0.104) < 0.003);
  check_posteriors(r);
}

TEST_CASE("EM on unanimous data") {
  std::vector<int> e;
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 4; ++j) e.push_back(i % 3);
  const auto r = dawid_skene_em(LabelMatrix(50, 4, 3, e));
  CHECK(r.converged);
  CHECK(r.iterations <= 2);
  for (int i = 0; i < 50; ++i) CHECK(r.labels[i] == i % 3);
  check_posteriors(r);
}

TEST_CASE("EM with K=1 copies the column") {
  Rng rng(2);
  std::vector<int> e(200);
  for (auto& v : e) v = static_cast<int>(rng.index(3));
  const auto r = dawid_skene_em(LabelMatrix(200, 1, 3, e));
  CHECK(r.labels == e);
}

TEST_CASE("EM beats majority vote on a heterogeneous panel") {
  double em_sum = 0, mv_sum = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::vector<int> clean(3000);
    Rng rng(seed);
    for (auto& c : clean) c = static_cast<int>(rng.index(2));
    const auto lm = heterogeneous_panel(clean, {0.9, 0.7, 0.55}, mix_seed(seed, 1));
    const auto em = dawid_skene_em(lm);
    const auto mv = majority_vote(lm);
    em_sum += label_accuracy(em.labels, clean);
    mv_sum += label_accuracy(mv.labels, clean);
    check_posteriors(em);
    for (std::size_t i = 1; i < em.log_likelihood.size(); ++i)
      CHECK(em.log_likelihood[i] >= em.log_likelihood[i - 1] - 1e-9);
    for (std::size_t i = 1; i < em.objective.size(); ++i) CHECK(em.objective[i] >= em.objective[i - 1] - 1e-9);
    // The most accurate annotator is recognized.
    CHECK(em.annotator_confusions[0](0, 0) > em.annotator_confusions[2](0, 0));
  }
  CHECK(em_sum / 10 >= mv_sum / 10);
}

TEST_CASE("EM log-likelihood non-decreasing on random multi-class panels") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed + 100);
    const int m = 2 + static_cast<int>(rng.index(3));
    std::vector<int> clean(400);
    for (auto& c : clean) c = static_cast<int>(rng.index(m));
    std::vector<TransitionMatrix> ms;
    for (int j = 0; j < 5; ++j) ms.push_back(make_symmetric(0.1 + 0.5 * rng.uniform() * (m - 1) / m, m));
    const auto lm = sample_noisy_labels(clean, AnnotatorPanel(ms), seed);
    const auto em = dawid_skene_em(lm);
    check_posteriors(em);
    CHECK(em.log_likelihood.size() >= 1);
    for (std::size_t i = 1; i < em.log_likelihood.size(); ++i)
      CHECK(em.log_likelihood[i] >= em.log_likelihood[i - 1] - 1e-9);
  }
}

TEST_CASE("EM stops at max_iter without error") {
  std::vector<int> clean(500);
  for (std::size_t i = 0; i < clean.size(); ++i) clean[i] = static_cast<int>(i % 2);
  const auto lm = heterogeneous_panel(clean, {0.6, 0.6, 0.6, 0.6}, 3);
  EmOptions o;
  o.max_iter = 1;
  o.tol = 0.0;
  const auto r = dawid_skene_em(lm, o);
  CHECK(r.iterations == 1);
  CHECK_THROWS_AS(dawid_skene_em(LabelMatrix(0, 2, 2)), DomainError);
  EmOptions bad;
  bad.max_iter = 0;
  CHECK_THROWS_AS(dawid_skene_em(lm, bad), DomainError);
}

TEST_CASE("permutation equivariance") {
  std::vector<int> clean(2000);
  for (std::size_t i = 0; i < clean.size(); ++i) clean[i] = static_cast<int>(i % 3);
  std::vector<TransitionMatrix> ms{make_symmetric(0.2, 3), make_symmetric(0.4, 3), make_symmetric(0.3, 3),
                                   make_symmetric(0.5, 3), make_symmetric(0.1, 3)};
  const auto lm = sample_noisy_labels(clean, AnnotatorPanel(ms), 17);
  const std::vector<std::size_t> order{3, 0, 4, 2, 1};
  const auto perm = lm.permute_columns(order);
  CHECK(majority_vote(lm).labels == majority_vote(perm).labels);
  CHECK(dawid_skene_em(lm).labels == dawid_skene_em(perm).labels);
}

TEST_CASE("argmax_smallest") {
  CHECK(argmax_smallest(std::vector<double>{0.2, 0.5, 0.5}) == 1);
  CHECK(argmax_smallest(std::vector<double>{0.7, 0.1, 0.7}) == 0);
}

}  // TEST_SUITE
