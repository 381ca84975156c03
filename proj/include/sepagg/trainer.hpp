#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "sepagg/aggregation.hpp"
#include "sepagg/bounds.hpp"
#include "sepagg/dataset.hpp"
#include "sepagg/model.hpp"
#include "sepagg/transition.hpp"

namespace sepagg {

/// How the K noisy labels reach the trainer.
enum class TrainTreatment { separate, majority_vote, em };
const char* to_string(TrainTreatment t);

struct TrainConfig {
  ModelKind model = ModelKind::linear_softmax;
  std::size_t hidden = 32;
  LossFamily loss = LossFamily::ce;
  TrainTreatment treatment = TrainTreatment::separate;
  double learning_rate = 0.05;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  int epochs = 100;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  /// Noise matrix of the labels actually trained on. Required for backward.
  std::optional<TransitionMatrix> t_for_correction;

  /// Throws DomainError on an unusable configuration.
  void validate() const;
};

struct Metrics {
  std::vector<double> epoch_loss;
  double best_test_accuracy = 0.0;
  double final_test_accuracy = 0.0;
  int epochs_run = 0;
  std::uint64_t seed = 0;
};

/// Fraction of rows whose argmax prediction equals the clean label.
double accuracy(const Model& model, const Dataset& data);

Model make_model(const TrainConfig& cfg, std::size_t input_dim, int classes);

/// Minibatch SGD with momentum and weight decay. `train_data` must carry
/// noisy labels (a single column for mv/em); `test_data` must carry clean
/// labels. Throws TrainingError when a batch loss is not finite.
Metrics train(const Dataset& train_data, const Dataset& test_data, const TrainConfig& cfg);

/// Same as train() and also returns the final model.
Metrics train(const Dataset& train_data, const Dataset& test_data, const TrainConfig& cfg, Model* model_out);

/// Replaces the K noisy columns with the aggregated label for mv/em; leaves
/// the data unchanged for separation.
Dataset apply_treatment(const Dataset& data, TrainTreatment treatment, const EmOptions& em = {});

/// Noise matrix seen by the loss under a treatment when each of the K
/// annotators follows `base`: `base` itself for separation, the
/// majority-vote matrix otherwise (exact for binary odd K, Monte Carlo with
/// `mc_trials` and `mc_seed` elsewhere).
TransitionMatrix correction_matrix(const TransitionMatrix& base, int k, TrainTreatment treatment,
                                   std::uint64_t mc_trials = 200000, std::uint64_t mc_seed = 0);

}  // namespace sepagg
