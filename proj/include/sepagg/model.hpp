#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sepagg/rng.hpp"

namespace sepagg {

enum class ModelKind { linear_softmax, one_hidden_relu };

/// Small classifier with a flat parameter vector.
///
/// Layout, row-major throughout:
///   linear_softmax:  W (M x D), b (M)
///   one_hidden_relu: W1 (H x D), b1 (H), W2 (M x H), b2 (M)
class Model {
 public:
  static Model linear(std::size_t input_dim, int classes);
  static Model mlp(std::size_t input_dim, std::size_t hidden, int classes);

  ModelKind kind() const noexcept { return kind_; }
  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t hidden() const noexcept { return hidden_; }
  int classes() const noexcept { return classes_; }

  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }
  std::size_t parameter_count() const noexcept { return params_.size(); }

  /// Gaussian initialization scaled by 1/sqrt(fan_in); biases start at zero.
  void initialize(Rng& rng);

  /// Per-class scores. `hidden_out` (size hidden()) receives the post-ReLU
  /// activations when the model has a hidden layer.
  void scores(std::span<const double> x, std::span<double> out, std::span<double> hidden_out) const;

  /// Softmax probabilities of the scores.
  std::vector<double> forward(std::span<const double> x) const;

  /// Adds d(loss)/d(params) into `grad`, given d(loss)/d(scores) for one example.
  void backprop(std::span<const double> x, std::span<const double> hidden_act,
                std::span<const double> dscores, std::span<double> grad) const;

 private:
  Model(ModelKind kind, std::size_t input_dim, std::size_t hidden, int classes);

  ModelKind kind_;
  std::size_t input_dim_;
  std::size_t hidden_;
  int classes_;
  std::vector<double> params_;
};

/// Max-subtracted softmax, in place.
void softmax_inplace(std::span<double> scores);

}  // namespace sepagg
