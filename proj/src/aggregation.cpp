#include "sepagg/aggregation.hpp"

#include <algorithm>
#include <cmath>

#include "sepagg/error.hpp"

namespace sepagg {

int argmax_smallest(std::span<const double> values) {
  int best = 0;
  for (int c = 1; c < static_cast<int>(values.size()); ++c)
    if (values[c] > values[best]) best = c;
  return best;
}

AggregationResult majority_vote(const LabelMatrix& labels) {
  if (labels.empty()) throw DomainError("cannot aggregate an empty label matrix");
  const std::size_t n = labels.rows(), k = labels.annotators();
  const int m = labels.classes();
  AggregationResult out;
  out.classes = m;
  out.labels.resize(n);
  out.posteriors.assign(n * m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double* p = out.posteriors.data() + i * m;
    for (int v : labels.row(i)) p[v] += 1.0;
    for (int c = 0; c < m; ++c) p[c] /= static_cast<double>(k);
    out.labels[i] = argmax_smallest({p, static_cast<std::size_t>(m)});
  }
  return out;
}

AggregationResult dawid_skene_em(const LabelMatrix& labels, const EmOptions& options) {
  if (labels.empty()) throw DomainError("cannot aggregate an empty label matrix");
  if (options.max_iter < 1) throw DomainError("EM needs max_iter >= 1");
  if (!(options.smoothing >= 0.0)) throw DomainError("EM smoothing must be non-negative");

  const std::size_t n = labels.rows(), k = labels.annotators();
  const int m = labels.classes();
  const double s = options.smoothing;

  AggregationResult out = majority_vote(labels);
  out.converged = false;
  out.annotator_confusions.assign(k, SquareMatrix{m, std::vector<double>(static_cast<std::size_t>(m) * m)});
  out.class_priors.assign(m, 0.0);

  std::vector<double>& q = out.posteriors;
  std::vector<double> log_prior(m);
  // log_conf[j][c*m + l] = log P(annotator j says l | true c)
  std::vector<std::vector<double>> log_conf(k, std::vector<double>(static_cast<std::size_t>(m) * m));
  std::vector<double> class_mass(m), scores(m), next_q(n * m);
  std::vector<int> next_labels(n);

  for (int iter = 1; iter <= options.max_iter; ++iter) {
    // M-step.
    std::fill(class_mass.begin(), class_mass.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < m; ++c) class_mass[c] += q[i * m + c];
    double prior_penalty = 0.0;
    for (int c = 0; c < m; ++c) {
      out.class_priors[c] = (class_mass[c] + s) / (static_cast<double>(n) + m * s);
      log_prior[c] = std::log(out.class_priors[c]);
      prior_penalty += s * log_prior[c];
    }
    for (std::size_t j = 0; j < k; ++j) {
      auto& conf = out.annotator_confusions[j];
      std::fill(conf.data.begin(), conf.data.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const int l = labels(i, j);
        for (int c = 0; c < m; ++c) conf(c, l) += q[i * m + c];
      }
      for (int c = 0; c < m; ++c) {
        const double denom = class_mass[c] + m * s;
        for (int l = 0; l < m; ++l) {
          conf(c, l) = denom > 0.0 ? (conf(c, l) + s) / denom : 1.0 / m;
          log_conf[j][static_cast<std::size_t>(c) * m + l] = std::log(conf(c, l));
          prior_penalty += s * log_conf[j][static_cast<std::size_t>(c) * m + l];
        }
      }
    }

    // E-step.
    double loglik = 0.0, change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (int c = 0; c < m; ++c) {
        double v = log_prior[c];
        for (std::size_t j = 0; j < k; ++j) v += log_conf[j][static_cast<std::size_t>(c) * m + labels(i, j)];
        scores[c] = v;
      }
      const double top = *std::max_element(scores.begin(), scores.end());
      double z = 0.0;
      for (int c = 0; c < m; ++c) z += std::exp(scores[c] - top);
      loglik += top + std::log(z);
      for (int c = 0; c < m; ++c) {
        next_q[i * m + c] = std::exp(scores[c] - top) / z;
        change = std::max(change, std::abs(next_q[i * m + c] - q[i * m + c]));
      }
      next_labels[i] = argmax_smallest({next_q.data() + i * m, static_cast<std::size_t>(m)});
    }
    out.log_likelihood.push_back(loglik);
    out.objective.push_back(loglik + prior_penalty);
    out.iterations = iter;

    const bool fixpoint = next_labels == out.labels;
    q.swap(next_q);
    out.labels.swap(next_labels);
    // Labels alone can sit still for many rounds while the confusions are
    // still moving, so a label fixpoint only counts once posteriors settle.
    // A single annotator has nothing to reweight; further rounds only let the
    // prior erode its labels.
    if ((fixpoint && change < options.tol) || (k == 1 && fixpoint)) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace sepagg
