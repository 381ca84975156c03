#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sepagg/label_matrix.hpp"
#include "sepagg/transition.hpp"

namespace sepagg {

struct AggregationResult {
  std::vector<int> labels;
  /// N x M row-major class probabilities; each row sums to 1.
  std::vector<double> posteriors;
  int classes = 2;
  /// Per-annotator estimated confusion matrices (EM only).
  std::vector<SquareMatrix> annotator_confusions;
  std::vector<double> class_priors;
  int iterations = 0;
  bool converged = true;
  /// Observed-data log-likelihood after each E-step (EM only).
  std::vector<double> log_likelihood;
  /// Log-likelihood plus the log of the smoothing prior; the quantity EM
  /// with additive smoothing is guaranteed not to decrease.
  std::vector<double> objective;

  double posterior(std::size_t n, int c) const { return posteriors[n * classes + c]; }
};

/// Most frequent class per row; posteriors are vote fractions; ties go to
/// the smallest class index. Throws DomainError on an empty matrix.
AggregationResult majority_vote(const LabelMatrix& labels);

struct EmOptions {
  int max_iter = 100;
  /// A label fixpoint also needs the largest posterior change below this.
  double tol = 1e-7;
  /// Additive (Laplace) smoothing on confusion and prior counts.
  double smoothing = 1.0;
};

/// Dawid-Skene EM with one confusion matrix per annotator. Starts from the
/// majority-vote soft counts and stops at a hard-label fixpoint whose largest
/// posterior change is below `tol`, or after `max_iter` iterations
/// (converged = false in that last case).
AggregationResult dawid_skene_em(const LabelMatrix& labels, const EmOptions& options = {});

/// Index of the largest entry, ties to the smallest index.
int argmax_smallest(std::span<const double> values);

}  // namespace sepagg
