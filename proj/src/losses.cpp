#include "sepagg/losses.hpp"

#include <algorithm>
#include <cmath>

#include "sepagg/error.hpp"

namespace sepagg {

double loss_ce(std::span<const double> probabilities, int label) {
  return -std::log(std::max(probabilities[label], kProbabilityFloor));
}

std::vector<double> per_class_ce(std::span<const double> probabilities) {
  std::vector<double> out(probabilities.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = loss_ce(probabilities, static_cast<int>(k));
  return out;
}

double loss_backward(std::span<const double> per_class_loss, const SquareMatrix& t_inverse, int noisy) {
  if (static_cast<std::size_t>(t_inverse.m) != per_class_loss.size())
    throw DomainError("inverse transition matrix does not match the class count");
  double s = 0.0;
  for (int k = 0; k < t_inverse.m; ++k) s += t_inverse(noisy, k) * per_class_loss[k];
  return s;
}

LossSpec LossSpec::backward(const TransitionMatrix& t) {
  return {LossFamily::backward, invert_transition(t)};
}

namespace {

// Base loss of one observed label and its gradient with respect to the
// scores, accumulated with weight `w` into `dscores`.
double label_loss(std::span<const double> p, int label, const LossSpec& spec, double w,
                  std::span<double> dscores) {
  const int m = static_cast<int>(p.size());
  if (spec.family == LossFamily::backward) {
    const SquareMatrix& inv = *spec.t_inverse;
    double loss = 0.0;
    for (int k = 0; k < m; ++k) {
      const double c = inv(label, k);
      loss += c * loss_ce(p, k);
      if (p[k] < kProbabilityFloor) continue;  // floored term is constant
      // d(-ln p_k)/d(scores) = p - e_k
      for (int j = 0; j < m; ++j) dscores[j] += w * c * p[j];
      dscores[k] -= w * c;
    }
    return loss;
  }
  if (p[label] >= kProbabilityFloor) {
    for (int j = 0; j < m; ++j) dscores[j] += w * p[j];
    dscores[label] -= w;
  }
  return loss_ce(p, label);
}

// Separated loss of example `feature_row` scored against the labels of
// `label_row`. Adds weight * gradient into grad when non-null.
double separated_term(const Model& model, const Batch& batch, std::size_t feature_row,
                      std::size_t label_row, const LossSpec& spec, double weight,
                      std::vector<double>& scores, std::vector<double>& hidden,
                      std::vector<double>& dscores, std::vector<double>* grad) {
  const std::span<const double> x = batch.features.subspan(feature_row * batch.dim, batch.dim);
  model.scores(x, scores, hidden);
  softmax_inplace(scores);
  const auto labels = batch.labels->row(label_row);
  const double per_label = 1.0 / static_cast<double>(labels.size());
  std::fill(dscores.begin(), dscores.end(), 0.0);
  double loss = 0.0;
  for (int y : labels) loss += label_loss(scores, y, spec, per_label, dscores);
  if (grad) {
    for (double& v : dscores) v *= weight;
    model.backprop(x, hidden, dscores, *grad);
  }
  return loss * per_label;
}

}  // namespace

double loss_separation(const Model& model, std::span<const double> x, std::span<const int> labels,
                       const LossSpec& spec) {
  if (spec.family == LossFamily::backward && !spec.t_inverse)
    throw DomainError("backward loss needs an inverse transition matrix");
  const auto p = model.forward(x);
  std::vector<double> scratch(p.size());
  double loss = 0.0;
  for (int y : labels) loss += label_loss(p, y, spec, 0.0, scratch);
  return loss / static_cast<double>(labels.size());
}

double batch_loss(const Model& model, const Batch& batch, const LossSpec& spec,
                  std::span<const PeerPair> peers, std::vector<double>* grad) {
  if (!batch.labels) throw DomainError("batch has no labels");
  if (spec.family == LossFamily::backward && !spec.t_inverse)
    throw DomainError("backward loss needs an inverse transition matrix");
  const std::size_t b = batch.rows.size();
  if (b == 0) throw DomainError("empty batch");
  if (spec.family == LossFamily::peer && peers.size() != b)
    throw DomainError("peer loss needs one mismatched pair per batch example");
  if (grad) grad->assign(model.parameter_count(), 0.0);

  std::vector<double> scores(static_cast<std::size_t>(model.classes()));
  std::vector<double> dscores(scores.size());
  std::vector<double> hidden(model.hidden());
  const double w = 1.0 / static_cast<double>(b);
  double total = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t r = batch.rows[i];
    total += separated_term(model, batch, r, r, spec, w, scores, hidden, dscores, grad);
    if (spec.family == LossFamily::peer) {
      const std::size_t f = batch.rows[peers[i].feature], l = batch.rows[peers[i].label];
      total -= separated_term(model, batch, f, l, spec, -w, scores, hidden, dscores, grad);
    }
  }
  return total * w;
}

std::vector<PeerPair> draw_peer_pairs(std::size_t batch_size, Rng& rng) {
  std::vector<PeerPair> pairs(batch_size);
  for (auto& p : pairs) {
    p.feature = static_cast<std::size_t>(rng.index(batch_size));
    p.label = static_cast<std::size_t>(rng.index(batch_size));
  }
  return pairs;
}

}  // namespace sepagg

namespace sepagg {

double loss_peer(const Model& model, const Batch& batch, Rng& rng, std::vector<double>* grad) {
  const auto pairs = draw_peer_pairs(batch.rows.size(), rng);
  return batch_loss(model, batch, LossSpec::peer(), pairs, grad);
}

}  // namespace sepagg
