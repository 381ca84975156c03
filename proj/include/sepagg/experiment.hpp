#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "sepagg/aggregation.hpp"
#include "sepagg/bounds.hpp"
#include "sepagg/trainer.hpp"

namespace sepagg {

struct BlobsSource {
  int m = 2;
  std::size_t n = 2000;
  std::size_t dim = 10;
  double separation = 2.0;
};

struct CsvSource {
  std::filesystem::path path;
};

enum class NoiseModel { symmetric, instance };

/// Sweep definition; see docs/experiment_config.md for the JSON form.
struct ExperimentConfig {
  std::variant<BlobsSource, CsvSource> dataset = BlobsSource{};
  NoiseModel noise = NoiseModel::symmetric;
  /// Instance noise only; negative means epsilon / 2.
  double instance_spread = -1.0;
  std::vector<int> k_values;
  std::vector<double> epsilon_values;
  std::vector<LossFamily> losses{LossFamily::ce};
  std::vector<TrainTreatment> treatments{TrainTreatment::separate, TrainTreatment::majority_vote,
                                         TrainTreatment::em};
  std::vector<std::uint64_t> seeds{0};
  /// Loss, treatment and seed are overwritten per run.
  TrainConfig train;
  EmOptions em;
  double test_fraction = 0.5;
  std::filesystem::path output_dir;
  std::size_t threads = 1;

  /// Throws ParseError on malformed or unknown fields.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::filesystem::path& path);
  /// Throws DomainError on empty sweep lists or bad values.
  void validate() const;
};

struct SweepRow {
  int k = 0;
  double epsilon = 0.0;
  LossFamily loss = LossFamily::ce;
  TrainTreatment treatment = TrainTreatment::separate;
  std::uint64_t seed = 0;
  double best_test_accuracy = 0.0;
  double final_test_accuracy = 0.0;
  double wall_seconds = 0.0;
  /// Empty on success.
  std::string error;
};

/// Per (K, epsilon, loss): mean best accuracy of each treatment and the
/// better of the two aggregation means.
struct SummaryRow {
  int k = 0;
  double epsilon = 0.0;
  LossFamily loss = LossFamily::ce;
  std::optional<double> separate;
  std::optional<double> majority_vote;
  std::optional<double> em;
  std::optional<double> aggregate_best;
};

struct SweepResult {
  /// Canonical order: K, then epsilon, then loss, then treatment, then seed,
  /// each in config order.
  std::vector<SweepRow> rows;
  std::vector<SummaryRow> summary;
  std::size_t failures = 0;
};

SweepResult run_experiment(const ExperimentConfig& cfg);
std::vector<SummaryRow> summarize(const std::vector<SweepRow>& rows);

void write_sweep_csv(const SweepResult& r, std::ostream& out);
void write_summary_csv(const SweepResult& r, std::ostream& out);
void write_timing_csv(const SweepResult& r, std::ostream& out);
/// Writes sweep.csv, summary.csv and timing.csv into `dir`, creating it.
void write_experiment_outputs(const SweepResult& r, const std::filesystem::path& dir);

}  // namespace sepagg
