#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sepagg/label_matrix.hpp"

namespace sepagg {

/// Square matrix of doubles, row-major. Used for results that are not
/// row-stochastic, such as the inverse of a transition matrix.
struct SquareMatrix {
  int m = 0;
  std::vector<double> data;

  double operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * m + j]; }
  double& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * m + j]; }
};

/// Row-stochastic label-corruption matrix: (i, j) = P(noisy = j | clean = i).
class TransitionMatrix {
 public:
  /// Validates entries in [0,1] and row sums within `row_tolerance` of 1.
  static TransitionMatrix from_rows(int m, std::vector<double> rows, double row_tolerance = 1e-12);
  /// Binary matrix [[1-rho0, rho0], [rho1, 1-rho1]].
  static TransitionMatrix binary(double rho0, double rho1);
  static TransitionMatrix identity(int m);

  int classes() const noexcept { return m_; }
  double operator()(int i, int j) const { return rows_[static_cast<std::size_t>(i) * m_ + j]; }
  std::span<const double> row(int i) const {
    return {rows_.data() + static_cast<std::size_t>(i) * m_, static_cast<std::size_t>(m_)};
  }
  const std::vector<double>& entries() const noexcept { return rows_; }

  /// P(noisy = 1 | clean = 0). Binary only.
  double rho0() const;
  /// P(noisy = 0 | clean = 1). Binary only.
  double rho1() const;

  /// Sum of the off-diagonal entries of row i (the flip mass of class i),
  /// accumulated directly so that for m=2 it equals rho0/rho1 bit for bit.
  double off_diagonal_mass(int i) const;
  bool is_identity() const;

  std::string to_string() const;

  friend bool operator==(const TransitionMatrix&, const TransitionMatrix&) = default;

 private:
  TransitionMatrix(int m, std::vector<double> rows) : m_(m), rows_(std::move(rows)) {}

  int m_ = 2;
  std::vector<double> rows_;
};

/// Diagonal 1-eps, off-diagonal eps/(m-1).
TransitionMatrix make_symmetric(double epsilon, int m);

/// K annotators' noise matrices. All share the class count.
class AnnotatorPanel {
 public:
  explicit AnnotatorPanel(std::vector<TransitionMatrix> matrices);
  /// K copies of `t`.
  static AnnotatorPanel identical(const TransitionMatrix& t, std::size_t k);

  std::size_t size() const noexcept { return matrices_.size(); }
  int classes() const noexcept { return matrices_.front().classes(); }
  const TransitionMatrix& operator[](std::size_t j) const { return matrices_[j]; }
  bool is_homogeneous() const;

 private:
  std::vector<TransitionMatrix> matrices_;
};

/// Exact transition matrix of the majority-vote label for K identical binary
/// annotators. K must be odd; m must be 2.
TransitionMatrix aggregate_majority(const TransitionMatrix& t, int k);

/// Empirical transition matrix of the majority-vote label, from `trials`
/// simulated annotation rounds per clean class. Ties go to the smallest class
/// index. Works for any m and for heterogeneous panels.
TransitionMatrix aggregate_majority_mc(const AnnotatorPanel& panel, std::uint64_t trials,
                                       std::uint64_t seed);

/// Inverse of `t`. Binary matrices use the closed form and require
/// rho0 + rho1 < 1; larger matrices are rejected above condition number 1e12.
SquareMatrix invert_transition(const TransitionMatrix& t);

/// Smallest real part among the eigenvalues of `t`.
double min_eigenvalue(const TransitionMatrix& t);

struct SymmetricNoise {
  double epsilon = 0.0;
};
struct ExplicitNoise {
  TransitionMatrix matrix;
};
/// Feature-dependent flip rate: per example, flip mass is
/// clip(epsilon + shift + spread * z, clip_lo, clip_hi), where z is the
/// standardized projection of the features on a seeded unit vector (one
/// vector per annotator) and `shift` is solved so the mean flip mass over the
/// sample equals epsilon. Flipped labels are uniform over the other classes.
struct InstanceNoise {
  double epsilon = 0.0;
  std::uint64_t projection_seed = 0;
  double clip_lo = 0.0;
  double clip_hi = 0.49;
  /// Negative means "use epsilon / 2".
  double spread = -1.0;
};

struct NoiseSpec {
  std::variant<SymmetricNoise, ExplicitNoise, InstanceNoise> kind;
  int m = 2;

  /// Throws DomainError on out-of-range parameters.
  void validate() const;
};

/// Row-major N x D feature block.
struct FeatureView {
  std::span<const double> data;
  std::size_t dim = 0;
};

/// Column j is drawn independently per example from row clean[n] of panel[j].
/// Reproducible given seed.
LabelMatrix sample_noisy_labels(std::span<const int> clean, const AnnotatorPanel& panel,
                                std::uint64_t seed);

/// Dispatches on the noise kind. Instance noise needs `features`.
LabelMatrix sample_noisy_labels(std::span<const int> clean, const FeatureView* features,
                                const NoiseSpec& spec, std::size_t k, std::uint64_t seed);

/// Per-example flip mass for one annotator under instance noise.
std::vector<double> instance_flip_rates(const FeatureView& features, const InstanceNoise& noise,
                                        std::size_t annotator);

}  // namespace sepagg
