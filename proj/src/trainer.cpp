#include "sepagg/trainer.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "sepagg/error.hpp"
#include "sepagg/losses.hpp"
#include "sepagg/rng.hpp"

namespace sepagg {

const char* to_string(TrainTreatment t) {
  switch (t) {
    case TrainTreatment::separate: return "sep";
    case TrainTreatment::majority_vote: return "mv";
    case TrainTreatment::em: return "em";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw DomainError("learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw DomainError("momentum must lie in [0,1)");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) throw DomainError("weight decay must be non-negative");
  if (epochs < 1) throw DomainError("epochs must be at least 1");
  if (batch_size < 1) throw DomainError("batch size must be at least 1");
  if (model == ModelKind::one_hidden_relu && hidden < 1) throw DomainError("hidden width must be at least 1");
  if (loss == LossFamily::backward && !t_for_correction)
    throw DomainError("backward loss needs t_for_correction");
}

double accuracy(const Model& model, const Dataset& data) {
  if (!data.clean_labels) throw DomainError("accuracy needs clean labels");
  const std::size_t n = data.size();
  if (n == 0) return 0.0;
  std::vector<double> s(static_cast<std::size_t>(model.classes())), h(model.hidden());
  std::size_t hit = 0;
  for (std::size_t i = 0; i < n; ++i) {
    model.scores(data.row(i), s, h);
    if (argmax_smallest(s) == (*data.clean_labels)[i]) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(n);
}

Model make_model(const TrainConfig& cfg, std::size_t input_dim, int classes) {
  return cfg.model == ModelKind::linear_softmax ? Model::linear(input_dim, classes)
                                                : Model::mlp(input_dim, cfg.hidden, classes);
}

Metrics train(const Dataset& train_data, const Dataset& test_data, const TrainConfig& cfg) {
  return train(train_data, test_data, cfg, nullptr);
}

Metrics train(const Dataset& train_data, const Dataset& test_data, const TrainConfig& cfg, Model* model_out) {
  cfg.validate();
  train_data.validate();
  test_data.validate();
  if (!train_data.noisy_labels) throw DomainError("training data has no noisy labels");
  if (cfg.treatment != TrainTreatment::separate && train_data.noisy_labels->annotators() != 1)
    throw DomainError(std::string("treatment ") + to_string(cfg.treatment) +
                      " expects a single aggregated label column");
  if (!test_data.clean_labels) throw DomainError("test data has no clean labels");
  if (test_data.dim != train_data.dim) throw DomainError("train and test feature dimensions differ");
  if (test_data.m != train_data.m) throw DomainError("train and test class counts differ");
  const std::size_t n = train_data.size();
  if (n == 0) throw DomainError("training data is empty");
  if (train_data.dim == 0) throw DomainError("training data has no features");

  LossSpec spec;
  spec.family = cfg.loss;
  if (cfg.loss == LossFamily::backward) {
    if (cfg.t_for_correction->classes() != train_data.m)
      throw DomainError("t_for_correction does not match the class count");
    spec = LossSpec::backward(*cfg.t_for_correction);
  }

  Model model = make_model(cfg, train_data.dim, train_data.m);
  Rng init_rng(mix_seed(cfg.seed, 0));
  Rng shuffle_rng(mix_seed(cfg.seed, 1));
  Rng peer_rng(mix_seed(cfg.seed, 2));
  model.initialize(init_rng);

  Metrics metrics;
  metrics.seed = cfg.seed;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grad, velocity(model.parameter_count(), 0.0);
  std::vector<PeerPair> peers;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.index(i)]);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_index) {
      const std::size_t len = std::min(cfg.batch_size, n - start);
      const Batch batch{train_data.features, train_data.dim, &*train_data.noisy_labels,
                        std::span<const std::size_t>(order).subspan(start, len)};
      if (cfg.loss == LossFamily::peer) peers = draw_peer_pairs(len, peer_rng);
      const double loss = batch_loss(model, batch, spec, peers, &grad);
      if (!std::isfinite(loss))
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_index));
      loss_sum += loss * static_cast<double>(len);
      auto params = model.parameters();
      for (std::size_t p = 0; p < params.size(); ++p) {
        velocity[p] = cfg.momentum * velocity[p] + grad[p] + cfg.weight_decay * params[p];
        params[p] -= cfg.learning_rate * velocity[p];
      }
      for (double v : params)
        if (!std::isfinite(v))
          throw TrainingError("non-finite parameter at epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(batch_index));
    }
    metrics.epoch_loss.push_back(loss_sum / static_cast<double>(n));
    const double acc = accuracy(model, test_data);
    metrics.best_test_accuracy = epoch == 0 ? acc : std::max(metrics.best_test_accuracy, acc);
    metrics.final_test_accuracy = acc;
    metrics.epochs_run = epoch + 1;
  }
  if (model_out) *model_out = std::move(model);
  return metrics;
}

Dataset apply_treatment(const Dataset& data, TrainTreatment treatment, const EmOptions& em) {
  if (treatment == TrainTreatment::separate) return data;
  if (!data.noisy_labels) throw DomainError("aggregation needs noisy labels");
  const AggregationResult agg = treatment == TrainTreatment::majority_vote
                                    ? majority_vote(*data.noisy_labels)
                                    : dawid_skene_em(*data.noisy_labels, em);
  Dataset out = data;
  out.noisy_labels = LabelMatrix(data.size(), 1, data.m, agg.labels);
  return out;
}

TransitionMatrix correction_matrix(const TransitionMatrix& base, int k, TrainTreatment treatment,
                                   std::uint64_t mc_trials, std::uint64_t mc_seed) {
  if (k < 1) throw DomainError("K must be at least 1");
  if (treatment == TrainTreatment::separate) return base;
  if (base.classes() == 2 && k % 2 == 1) return aggregate_majority(base, k);
  return aggregate_majority_mc(AnnotatorPanel::identical(base, static_cast<std::size_t>(k)), mc_trials, mc_seed);
}

}  // namespace sepagg
