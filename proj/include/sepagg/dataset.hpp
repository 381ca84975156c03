#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sepagg/label_matrix.hpp"
#include "sepagg/transition.hpp"

namespace sepagg {

/// Named numeric column carried through load/save untouched (for example
/// aggregation outputs such as `y_hat` and `p0..`).
struct ExtraColumn {
  std::string name;
  std::vector<double> values;
};

/// Features, optional clean labels, optional K noisy labels per example.
///
/// CSV layout: a header row, then one row per example. Columns `f0..f{D-1}`
/// hold features, `y` the clean label, `ny0..ny{K-1}` the noisy labels.
/// Any other column is kept as an ExtraColumn.
struct Dataset {
  std::size_t dim = 0;
  std::vector<double> features;  ///< N x D row-major
  std::optional<std::vector<int>> clean_labels;
  std::optional<LabelMatrix> noisy_labels;
  int m = 2;
  std::vector<ExtraColumn> extra;

  std::size_t size() const noexcept;
  std::span<const double> row(std::size_t n) const { return {features.data() + n * dim, dim}; }
  FeatureView view() const { return {features, dim}; }
  std::vector<std::string> column_names() const;

  /// Throws DomainError when row counts disagree or labels are out of range.
  void validate() const;
  /// Rows in the given order, all fields included.
  Dataset subset(std::span<const std::size_t> rows) const;
  /// Adds or replaces an extra column.
  void set_extra(std::string name, std::vector<double> values);
};

/// m isotropic unit-variance Gaussians whose means are `separation` apart;
/// example n belongs to class n % m.
Dataset gen_blobs(int m, std::size_t n, std::size_t dim, double separation, std::uint64_t seed);

/// `m = 0` infers the class count from the largest label (at least 2).
Dataset read_csv(std::istream& in, int m = 0);
void write_csv(const Dataset& data, std::ostream& out);
Dataset load_csv(const std::filesystem::path& path, int m = 0);
void save_csv(const Dataset& data, const std::filesystem::path& path);

struct SplitSpec {
  double test_fraction = 0.5;
  std::uint64_t seed = 0;
};

/// Seeded shuffle then partition, stratified by clean label when present.
std::pair<Dataset, Dataset> split(const Dataset& data, const SplitSpec& spec);

/// Copy of `data` with `noisy_labels` sampled from the clean labels.
Dataset annotate(const Dataset& data, const NoiseSpec& noise, std::size_t k, std::uint64_t seed);

}  // namespace sepagg
