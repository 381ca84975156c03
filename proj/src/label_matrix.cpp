#include "sepagg/label_matrix.hpp"

#include <string>

#include "sepagg/error.hpp"

namespace sepagg {

LabelMatrix::LabelMatrix(std::size_t n, std::size_t k, int m)
    : n_(n), k_(k), m_(m), entries_(n * k, 0) {
  if (m < 2) throw DomainError("label matrix needs at least 2 classes");
}

LabelMatrix::LabelMatrix(std::size_t n, std::size_t k, int m, std::vector<int> entries)
    : n_(n), k_(k), m_(m), entries_(std::move(entries)) {
  if (m < 2) throw DomainError("label matrix needs at least 2 classes");
  if (entries_.size() != n * k)
    throw DomainError("label matrix has " + std::to_string(entries_.size()) +
                      " entries, expected " + std::to_string(n * k));
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i] < 0 || entries_[i] >= m)
      throw DomainError("label " + std::to_string(entries_[i]) + " at row " +
                        std::to_string(i / (k ? k : 1)) + " outside [0, " + std::to_string(m) + ")");
  }
}

std::vector<int> LabelMatrix::column(std::size_t j) const {
  std::vector<int> out(n_);
  for (std::size_t n = 0; n < n_; ++n) out[n] = (*this)(n, j);
  return out;
}

LabelMatrix LabelMatrix::permute_columns(std::span<const std::size_t> order) const {
  if (order.size() != k_) throw DomainError("column permutation has wrong length");
  LabelMatrix out(n_, k_, m_);
  for (std::size_t n = 0; n < n_; ++n)
    for (std::size_t j = 0; j < k_; ++j) out(n, j) = (*this)(n, order[j]);
  return out;
}

LabelMatrix LabelMatrix::select_rows(std::span<const std::size_t> rows) const {
  LabelMatrix out(rows.size(), k_, m_);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < k_; ++j) out(i, j) = (*this)(rows[i], j);
  return out;
}

}  // namespace sepagg
