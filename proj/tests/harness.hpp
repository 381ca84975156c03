#pragma once
// Checks shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sepagg/aggregation.hpp"
#include "sepagg/dataset.hpp"
#include "sepagg/losses.hpp"
#include "sepagg/model.hpp"
#include "sepagg/rng.hpp"
#include "sepagg/transition.hpp"

namespace harness {

using namespace sepagg;

// Random row-stochastic matrix with a dominant diagonal.
inline TransitionMatrix random_transition(int m, Rng& rng, double max_off = 0.4) {
  std::vector<double> rows(static_cast<std::size_t>(m * m));
  for (int i = 0; i < m; ++i) {
    const double off = max_off * rng.uniform();
    std::vector<double> w(static_cast<std::size_t>(m), 0.0);
    double s = 0;
    for (int j = 0; j < m; ++j)
      if (j != i) s += w[j] = 0.1 + rng.uniform();
    for (int j = 0; j < m; ++j) rows[i * m + j] = j == i ? 0.0 : off * w[j] / s;
    double acc = 0;
    for (int j = 0; j < m; ++j)
      if (j != i) acc += rows[i * m + j];
    rows[i * m + i] = 1.0 - acc;
  }
  return TransitionMatrix::from_rows(m, rows);
}

inline Model random_model(ModelKind kind, std::size_t dim, std::size_t hidden, int m, Rng& rng, double scale = 1.0) {
  Model model = kind == ModelKind::linear_softmax ? Model::linear(dim, m) : Model::mlp(dim, hidden, m);
  for (double& p : model.parameters()) p = scale * rng.normal();
  return model;
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
};

// Central differences with step 1e-5. Relative error per coordinate uses
// max(|analytic|, |numeric|, floor) as the denominator.
inline GradCheck gradient_check(ModelKind kind, LossFamily family, std::uint64_t seed, double floor = 1e-6) {
  Rng rng(seed);
  const int m = 2 + static_cast<int>(rng.index(3));
  const std::size_t dim = 2 + rng.index(5), hidden = 3 + rng.index(6), k = 1 + rng.index(5), b = 4 + rng.index(8);
  Model model = random_model(kind, dim, hidden, m, rng, 0.7);
  std::vector<double> feats(b * dim);
  for (double& v : feats) v = rng.normal();
  std::vector<int> labels(b * k);
  for (int& v : labels) v = static_cast<int>(rng.index(m));
  const LabelMatrix lm(b, k, m, labels);
  std::vector<std::size_t> rows(b);
  for (std::size_t i = 0; i < b; ++i) rows[i] = i;
  const Batch batch{feats, dim, &lm, rows};
  LossSpec spec;
  spec.family = family;
  if (family == LossFamily::backward) spec = LossSpec::backward(random_transition(m, rng));
  std::vector<PeerPair> peers;
  if (family == LossFamily::peer) peers = draw_peer_pairs(b, rng);

  std::vector<double> grad;
  batch_loss(model, batch, spec, peers, &grad);
  GradCheck out;
  const double h = 1e-5;
  auto params = model.parameters();
  for (std::size_t p = 0; p < params.size(); ++p) {
    const double saved = params[p];
    params[p] = saved + h;
    const double up = batch_loss(model, batch, spec, peers, nullptr);
    params[p] = saved - h;
    const double down = batch_loss(model, batch, spec, peers, nullptr);
    params[p] = saved;
    const double numeric = (up - down) / (2 * h);
    const double denom = std::max({std::abs(grad[p]), std::abs(numeric), floor});
    out.max_rel_error = std::max(out.max_rel_error, std::abs(grad[p] - numeric) / denom);
    ++out.coordinates;
  }
  return out;
}

// |E_{noisy | clean}[backward loss] - clean loss| for a random case.
inline double backward_unbiasedness_gap(int m, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t dim = 3;
  Model model = random_model(ModelKind::linear_softmax, dim, 0, m, rng);
  std::vector<double> x(dim);
  for (double& v : x) v = rng.normal();
  const int y = static_cast<int>(rng.index(m));
  const TransitionMatrix t = m == 2 ? TransitionMatrix::binary(0.45 * rng.uniform(), 0.45 * rng.uniform())
                                    : random_transition(m, rng);
  const auto inv = invert_transition(t);
  const auto per_class = per_class_ce(model.forward(x));
  double expect = 0.0;
  for (int noisy = 0; noisy < m; ++noisy) expect += t(y, noisy) * loss_backward(per_class, inv, noisy);
  return std::abs(expect - per_class[y]);
}

struct PeerInvariance {
  double noisy_mean = 0.0;
  double clean_mean = 0.0;
  double predicted = 0.0;  // (1 - 2 rho) * clean_mean
};

// Fixed random linear classifier on two Gaussian classes with uniform prior.
// Both peer losses share the mismatched pairs.
inline PeerInvariance peer_invariance(double rho, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t dim = 4;
  Dataset data = gen_blobs(2, n, dim, 1.5, mix_seed(seed, 1));
  Model model = random_model(ModelKind::linear_softmax, dim, 0, 2, rng, 0.5);
  const auto noisy = sample_noisy_labels(*data.clean_labels, AnnotatorPanel::identical(make_symmetric(rho, 2), 1),
                                         mix_seed(seed, 2));
  const LabelMatrix clean(n, 1, 2, *data.clean_labels);
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  Rng pair_rng(mix_seed(seed, 3));
  const auto peers = draw_peer_pairs(n, pair_rng);
  PeerInvariance r;
  r.noisy_mean = batch_loss(model, Batch{data.features, dim, &noisy, rows}, LossSpec::peer(), peers, nullptr);
  r.clean_mean = batch_loss(model, Batch{data.features, dim, &clean, rows}, LossSpec::peer(), peers, nullptr);
  r.predicted = (1 - 2 * rho) * r.clean_mean;
  return r;
}

struct EmVsMv {
  double em_accuracy = 0.0;
  double mv_accuracy = 0.0;
  bool monotone = true;
  AggregationResult em;
};

// Binary panel with the given per-annotator accuracies and random clean labels.
inline EmVsMv em_vs_mv(const std::vector<double>& accuracies, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> clean(n);
  for (int& c : clean) c = static_cast<int>(rng.index(2));
  std::vector<TransitionMatrix> ms;
  for (double a : accuracies) ms.push_back(make_symmetric(1.0 - a, 2));
  const auto lm = sample_noisy_labels(clean, AnnotatorPanel(ms), mix_seed(seed, 1));
  EmVsMv r;
  r.em = dawid_skene_em(lm);
  const auto mv = majority_vote(lm);
  auto acc = [&](const std::vector<int>& l) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < n; ++i) hit += l[i] == clean[i];
    return static_cast<double>(hit) / static_cast<double>(n);
  };
  r.em_accuracy = acc(r.em.labels);
  r.mv_accuracy = acc(mv.labels);
  for (std::size_t i = 1; i < r.em.log_likelihood.size(); ++i)
    if (r.em.log_likelihood[i] < r.em.log_likelihood[i - 1] - 1e-9) r.monotone = false;
  return r;
}

}  // namespace harness
