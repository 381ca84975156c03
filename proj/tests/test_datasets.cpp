#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "sepagg/dataset.hpp"
#include "sepagg/error.hpp"

using namespace sepagg;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("sepagg_test_" + name);
}

std::size_t parse_line_of(const std::string& csv) {
  std::istringstream in(csv);
  try {
    read_csv(in, 2);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST_SUITE("datasets") {

TEST_CASE("gen_blobs") {
  const Dataset d = gen_blobs(3, 300, 4, 5.0, 1);
  CHECK(d.size() == 300);
  CHECK(d.dim == 4);
  std::map<int, int> counts;
  for (int y : *d.clean_labels) ++counts[y];
  CHECK(counts[0] == 100);
  CHECK(counts[1] == 100);
  CHECK(counts[2] == 100);
  CHECK(d.features == gen_blobs(3, 300, 4, 5.0, 1).features);
  CHECK(d.features != gen_blobs(3, 300, 4, 5.0, 2).features);
  const Dataset empty = gen_blobs(2, 0, 3, 1.0, 1);
  CHECK(empty.size() == 0);
  CHECK_NOTHROW(empty.validate());
  // Class means are `separation` apart.
  const Dataset big = gen_blobs(2, 20000, 3, 4.0, 3);
  std::vector<double> mean(6, 0.0);
  for (std::size_t i = 0; i < big.size(); ++i)
    for (std::size_t j = 0; j < 3; ++j) mean[(*big.clean_labels)[i] * 3 + j] += big.features[i * 3 + j] / 10000;
  double dist = 0;
  for (std::size_t j = 0; j < 3; ++j) dist += std::pow(mean[j] - mean[3 + j], 2);
  CHECK(std::sqrt(dist) == doctest::Approx(4.0).epsilon(0.03));
  CHECK_THROWS_AS(gen_blobs(1, 10, 2, 1.0, 0), DomainError);
}

TEST_CASE("csv round trip") {
  Dataset d = gen_blobs(3, 200, 5, 2.0, 7);
  d = annotate(d, NoiseSpec{SymmetricNoise{0.3}, 3}, 4, 9);
  d.set_extra("weight", std::vector<double>(200, 1.0 / 3));
  d.features[0] = 1e-300;
  d.features[1] = -123456789.123456789;
  const auto path = temp_path("roundtrip.csv");
  save_csv(d, path);
  const Dataset back = load_csv(path);
  CHECK(back.m == 3);
  CHECK(back.dim == 5);
  CHECK(*back.clean_labels == *d.clean_labels);
  CHECK(*back.noisy_labels == *d.noisy_labels);
  REQUIRE(back.features.size() == d.features.size());
  for (std::size_t i = 0; i < d.features.size(); ++i)
    CHECK(std::abs(back.features[i] - d.features[i]) <= 1e-15 * std::abs(d.features[i]));
  CHECK(back.column_names() == d.column_names());
  CHECK(back.extra[0].values == d.extra[0].values);
  std::filesystem::remove(path);
}

TEST_CASE("csv parse errors carry line numbers") {
  CHECK(parse_line_of("f0,y\n1.0,0\n2.0\n") == 3);
  CHECK(parse_line_of("f0,y\n1.0,0\nabc,1\n") == 3);
  CHECK(parse_line_of("f0,y\n1.0,0\n2.0,1\n3.0,5\n") == 4);
  CHECK(parse_line_of("f0,y\n1.0,-1\n") == 2);
  CHECK(parse_line_of("f0,ny0,ny1\n1.0,0,1.5\n") == 2);
  CHECK(parse_line_of("f0,f2,y\n1,2,0\n") == 1);
  CHECK(parse_line_of("") == 1);
  CHECK_THROWS_AS(load_csv(temp_path("does_not_exist.csv")), IoError);
}

TEST_CASE("csv label-only file and class inference") {
  std::istringstream in("ny0,ny1,ny2\n0,1,1\n2,2,0\n");
  const Dataset d = read_csv(in);
  CHECK(d.size() == 2);
  CHECK(d.dim == 0);
  CHECK(d.m == 3);
  CHECK((*d.noisy_labels)(1, 1) == 2);
}

TEST_CASE("split") {
  Dataset d = gen_blobs(3, 301, 2, 1.0, 1);
  auto [tr, te] = split(d, {0.5, 3});
  CHECK(tr.size() + te.size() == d.size());
  std::map<int, int> all, test;
  for (int y : *d.clean_labels) ++all[y];
  for (int y : *te.clean_labels) ++test[y];
  for (auto [c, n] : all) CHECK(std::abs(test[c] - 0.5 * n) <= 1.0);
  // Disjoint and exhaustive: every feature row appears exactly once.
  std::multiset<std::pair<double, double>> rows, seen;
  for (std::size_t i = 0; i < d.size(); ++i) rows.insert({d.features[2 * i], d.features[2 * i + 1]});
  for (const Dataset* part : {&tr, &te})
    for (std::size_t i = 0; i < part->size(); ++i) seen.insert({part->features[2 * i], part->features[2 * i + 1]});
  CHECK(rows == seen);
  auto [tr2, te2] = split(d, {0.5, 3});
  CHECK(tr2.features == tr.features);
  CHECK_THROWS_AS(split(d, {1.0, 0}), DomainError);
  CHECK_THROWS_AS(split(d, {0.0, 0}), DomainError);
}

TEST_CASE("annotate") {
  Dataset d = gen_blobs(4, 500, 3, 1.0, 1);
  const Dataset a = annotate(d, NoiseSpec{SymmetricNoise{0.0}, 4}, 5, 3);
  for (std::size_t j = 0; j < 5; ++j) CHECK(a.noisy_labels->column(j) == *d.clean_labels);
  const Dataset b = annotate(d, NoiseSpec{InstanceNoise{0.2, 4}, 4}, 3, 3);
  CHECK(b.noisy_labels->annotators() == 3);
  Dataset unlabeled = d;
  unlabeled.clean_labels.reset();
  CHECK_THROWS_AS(annotate(unlabeled, NoiseSpec{SymmetricNoise{0.1}, 4}, 2, 1), DomainError);
}

TEST_CASE("validate") {
  Dataset d = gen_blobs(2, 10, 2, 1.0, 1);
  (*d.clean_labels)[3] = 5;
  CHECK_THROWS_AS(d.validate(), DomainError);
}

}  // TEST_SUITE
