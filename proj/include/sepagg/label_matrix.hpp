#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sepagg {

/// N x K integer annotations, row-major: entry (n, j) is annotator j's label
/// for example n. Every entry lies in [0, m).
class LabelMatrix {
 public:
  LabelMatrix() = default;
  LabelMatrix(std::size_t n, std::size_t k, int m);
  /// Throws DomainError if `entries.size() != n*k` or any entry is out of range.
  LabelMatrix(std::size_t n, std::size_t k, int m, std::vector<int> entries);

  std::size_t rows() const noexcept { return n_; }
  std::size_t annotators() const noexcept { return k_; }
  int classes() const noexcept { return m_; }
  bool empty() const noexcept { return n_ == 0 || k_ == 0; }

  int operator()(std::size_t n, std::size_t j) const { return entries_[n * k_ + j]; }
  int& operator()(std::size_t n, std::size_t j) { return entries_[n * k_ + j]; }

  std::span<const int> row(std::size_t n) const { return {entries_.data() + n * k_, k_}; }
  std::vector<int> column(std::size_t j) const;
  const std::vector<int>& entries() const noexcept { return entries_; }

  /// Same rows with annotator columns reordered; `order[j]` is the source column.
  LabelMatrix permute_columns(std::span<const std::size_t> order) const;
  /// Subset of rows, in the given order.
  LabelMatrix select_rows(std::span<const std::size_t> rows) const;

  friend bool operator==(const LabelMatrix&, const LabelMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t k_ = 0;
  int m_ = 2;
  std::vector<int> entries_;
};

}  // namespace sepagg
