#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "sepagg/bounds.hpp"
#include "sepagg/label_matrix.hpp"
#include "sepagg/model.hpp"
#include "sepagg/transition.hpp"

namespace sepagg {

/// Floor applied to probabilities inside logarithms.
inline constexpr double kProbabilityFloor = 1e-12;

/// -ln p[label], with p floored at kProbabilityFloor.
double loss_ce(std::span<const double> probabilities, int label);

/// Cross-entropy against every class: out[k] = loss_ce(p, k).
std::vector<double> per_class_ce(std::span<const double> probabilities);

/// Backward-corrected loss: sum_k (T^-1)[noisy, k] * per_class_loss[k].
double loss_backward(std::span<const double> per_class_loss, const SquareMatrix& t_inverse, int noisy);

/// How each observed label is scored.
struct LossSpec {
  LossFamily family = LossFamily::ce;
  /// Required for the backward family.
  std::optional<SquareMatrix> t_inverse;

  static LossSpec ce() { return {LossFamily::ce, std::nullopt}; }
  static LossSpec peer() { return {LossFamily::peer, std::nullopt}; }
  /// Inverts `t`; throws SingularityError when it is singular.
  static LossSpec backward(const TransitionMatrix& t);
};

/// Mean over the K labels of the base loss (ce, or backward-corrected ce).
/// For the peer family the base loss is ce.
double loss_separation(const Model& model, std::span<const double> x, std::span<const int> labels,
                       const LossSpec& spec);

/// Mismatched pair for the peer term of batch example i: features of
/// batch[feature], labels of batch[label].
struct PeerPair {
  std::size_t feature;
  std::size_t label;
};

/// A minibatch: `rows` index into a row-major feature block and a label matrix.
struct Batch {
  std::span<const double> features;
  std::size_t dim = 0;
  const LabelMatrix* labels = nullptr;
  std::span<const std::size_t> rows;
};

/// Mean loss over the batch. For the peer family, `peers[i]` gives the
/// mismatched pair subtracted from example i. When `grad` is non-null it is
/// overwritten with the analytic gradient with respect to the parameters.
double batch_loss(const Model& model, const Batch& batch, const LossSpec& spec,
                  std::span<const PeerPair> peers, std::vector<double>* grad);

/// Draws j1, j2 independently and uniformly from the batch for every example.
std::vector<PeerPair> draw_peer_pairs(std::size_t batch_size, Rng& rng);

}  // namespace sepagg

namespace sepagg {

/// Peer loss over a batch with freshly drawn mismatched pairs.
double loss_peer(const Model& model, const Batch& batch, Rng& rng, std::vector<double>* grad);

}  // namespace sepagg
