#include "sepagg/model.hpp"

#include <algorithm>
#include <cmath>

#include "sepagg/error.hpp"

namespace sepagg {

Model::Model(ModelKind kind, std::size_t input_dim, std::size_t hidden, int classes)
    : kind_(kind), input_dim_(input_dim), hidden_(hidden), classes_(classes) {
  if (classes < 2) throw DomainError("model needs at least 2 classes");
  if (input_dim == 0) throw DomainError("model needs a positive input dimension");
  const std::size_t m = static_cast<std::size_t>(classes);
  if (kind == ModelKind::linear_softmax) {
    params_.assign(m * input_dim + m, 0.0);
  } else {
    if (hidden == 0) throw DomainError("hidden layer width must be positive");
    params_.assign(hidden * input_dim + hidden + m * hidden + m, 0.0);
  }
}

Model Model::linear(std::size_t input_dim, int classes) {
  return Model(ModelKind::linear_softmax, input_dim, 0, classes);
}

Model Model::mlp(std::size_t input_dim, std::size_t hidden, int classes) {
  return Model(ModelKind::one_hidden_relu, input_dim, hidden, classes);
}

void Model::initialize(Rng& rng) {
  const std::size_t d = input_dim_, m = static_cast<std::size_t>(classes_), h = hidden_;
  std::fill(params_.begin(), params_.end(), 0.0);
  if (kind_ == ModelKind::linear_softmax) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (std::size_t i = 0; i < m * d; ++i) params_[i] = scale * rng.normal();
    return;
  }
  const double s1 = std::sqrt(2.0 / static_cast<double>(d));
  for (std::size_t i = 0; i < h * d; ++i) params_[i] = s1 * rng.normal();
  const std::size_t w2 = h * d + h;
  const double s2 = 1.0 / std::sqrt(static_cast<double>(h));
  for (std::size_t i = 0; i < m * h; ++i) params_[w2 + i] = s2 * rng.normal();
}

void Model::scores(std::span<const double> x, std::span<double> out, std::span<double> hidden_out) const {
  const std::size_t d = input_dim_, m = static_cast<std::size_t>(classes_), h = hidden_;
  const double* p = params_.data();
  if (kind_ == ModelKind::linear_softmax) {
    const double* b = p + m * d;
    for (std::size_t c = 0; c < m; ++c) {
      double s = b[c];
      const double* w = p + c * d;
      for (std::size_t i = 0; i < d; ++i) s += w[i] * x[i];
      out[c] = s;
    }
    return;
  }
  const double* b1 = p + h * d;
  const double* w2 = b1 + h;
  const double* b2 = w2 + m * h;
  for (std::size_t u = 0; u < h; ++u) {
    double s = b1[u];
    const double* w = p + u * d;
    for (std::size_t i = 0; i < d; ++i) s += w[i] * x[i];
    hidden_out[u] = s > 0.0 ? s : 0.0;
  }
  for (std::size_t c = 0; c < m; ++c) {
    double s = b2[c];
    const double* w = w2 + c * h;
    for (std::size_t u = 0; u < h; ++u) s += w[u] * hidden_out[u];
    out[c] = s;
  }
}

std::vector<double> Model::forward(std::span<const double> x) const {
  std::vector<double> out(static_cast<std::size_t>(classes_));
  std::vector<double> hid(hidden_);
  scores(x, out, hid);
  softmax_inplace(out);
  return out;
}

void Model::backprop(std::span<const double> x, std::span<const double> hidden_act,
                     std::span<const double> dscores, std::span<double> grad) const {
  const std::size_t d = input_dim_, m = static_cast<std::size_t>(classes_), h = hidden_;
  double* g = grad.data();
  if (kind_ == ModelKind::linear_softmax) {
    for (std::size_t c = 0; c < m; ++c) {
      const double ds = dscores[c];
      if (ds == 0.0) continue;
      double* gw = g + c * d;
      for (std::size_t i = 0; i < d; ++i) gw[i] += ds * x[i];
      g[m * d + c] += ds;
    }
    return;
  }
  const double* w2 = params_.data() + h * d + h;
  double* gb1 = g + h * d;
  double* gw2 = gb1 + h;
  double* gb2 = gw2 + m * h;
  for (std::size_t c = 0; c < m; ++c) {
    const double ds = dscores[c];
    for (std::size_t u = 0; u < h; ++u) gw2[c * h + u] += ds * hidden_act[u];
    gb2[c] += ds;
  }
  for (std::size_t u = 0; u < h; ++u) {
    if (hidden_act[u] <= 0.0) continue;  // ReLU inactive
    double dh = 0.0;
    for (std::size_t c = 0; c < m; ++c) dh += w2[c * h + u] * dscores[c];
    double* gw = g + u * d;
    for (std::size_t i = 0; i < d; ++i) gw[i] += dh * x[i];
    gb1[u] += dh;
  }
}

void softmax_inplace(std::span<double> scores) {
  const double top = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (double& s : scores) {
    s = std::exp(s - top);
    z += s;
  }
  for (double& s : scores) s /= z;
}

}  // namespace sepagg
