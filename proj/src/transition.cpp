#include "sepagg/transition.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "sepagg/error.hpp"
#include "sepagg/rng.hpp"

namespace sepagg {

namespace {

std::string fmt_num(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

Eigen::MatrixXd to_eigen(const TransitionMatrix& t) {
  const int m = t.classes();
  Eigen::MatrixXd a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = t(i, j);
  return a;
}

double binomial_coefficient(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

// Majority label of a vote-count vector, ties to the smallest class.
int vote_winner(std::span<const int> counts) {
  int best = 0;
  for (int c = 1; c < static_cast<int>(counts.size()); ++c)
    if (counts[c] > counts[best]) best = c;
  return best;
}

}  // namespace

TransitionMatrix TransitionMatrix::from_rows(int m, std::vector<double> rows, double row_tolerance) {
  if (m < 2) throw DomainError("transition matrix needs m >= 2, got " + std::to_string(m));
  if (rows.size() != static_cast<std::size_t>(m) * m)
    throw DomainError("transition matrix needs " + std::to_string(m * m) + " entries, got " +
                      std::to_string(rows.size()));
  for (int i = 0; i < m; ++i) {
    double sum = 0.0;
    for (int j = 0; j < m; ++j) {
      const double v = rows[static_cast<std::size_t>(i) * m + j];
      if (!(v >= 0.0 && v <= 1.0))
        throw DomainError("transition entry (" + std::to_string(i) + "," + std::to_string(j) +
                          ") = " + fmt_num(v) + " outside [0,1]");
      sum += v;
    }
    if (std::abs(sum - 1.0) > row_tolerance)
      throw DomainError("transition row " + std::to_string(i) + " sums to " + fmt_num(sum));
  }
  return TransitionMatrix(m, std::move(rows));
}

TransitionMatrix TransitionMatrix::binary(double rho0, double rho1) {
  if (!(rho0 >= 0.0 && rho0 <= 1.0)) throw DomainError("rho0 = " + fmt_num(rho0) + " outside [0,1]");
  if (!(rho1 >= 0.0 && rho1 <= 1.0)) throw DomainError("rho1 = " + fmt_num(rho1) + " outside [0,1]");
  return TransitionMatrix(2, {1.0 - rho0, rho0, rho1, 1.0 - rho1});
}

TransitionMatrix TransitionMatrix::identity(int m) { return make_symmetric(0.0, m); }

double TransitionMatrix::rho0() const {
  if (m_ != 2) throw DomainError("rho0 is defined for binary matrices only");
  return rows_[1];
}

double TransitionMatrix::rho1() const {
  if (m_ != 2) throw DomainError("rho1 is defined for binary matrices only");
  return rows_[2];
}

double TransitionMatrix::off_diagonal_mass(int i) const {
  double s = 0.0;
  for (int j = 0; j < m_; ++j)
    if (j != i) s += (*this)(i, j);
  return s;
}

bool TransitionMatrix::is_identity() const {
  for (int i = 0; i < m_; ++i)
    for (int j = 0; j < m_; ++j)
      if ((*this)(i, j) != (i == j ? 1.0 : 0.0)) return false;
  return true;
}

std::string TransitionMatrix::to_string() const {
  std::ostringstream os;
  os.precision(6);
  os << '[';
  for (int i = 0; i < m_; ++i) {
    os << (i ? ", [" : "[");
    for (int j = 0; j < m_; ++j) os << (j ? ", " : "") << (*this)(i, j);
    os << ']';
  }
  os << ']';
  return os.str();
}

TransitionMatrix make_symmetric(double epsilon, int m) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw DomainError("epsilon = " + fmt_num(epsilon) + " outside [0,1]");
  if (m < 2) throw DomainError("symmetric noise needs m >= 2");
  const double off = epsilon / (m - 1);
  std::vector<double> rows(static_cast<std::size_t>(m) * m, off);
  for (int i = 0; i < m; ++i) rows[static_cast<std::size_t>(i) * m + i] = 1.0 - epsilon;
  return TransitionMatrix::from_rows(m, std::move(rows), 1e-12);
}

AnnotatorPanel::AnnotatorPanel(std::vector<TransitionMatrix> matrices)
    : matrices_(std::move(matrices)) {
  if (matrices_.empty()) throw DomainError("annotator panel needs at least one annotator");
  for (const auto& t : matrices_)
    if (t.classes() != matrices_.front().classes())
      throw DomainError("annotator matrices disagree on the class count");
}

AnnotatorPanel AnnotatorPanel::identical(const TransitionMatrix& t, std::size_t k) {
  return AnnotatorPanel(std::vector<TransitionMatrix>(k, t));
}

bool AnnotatorPanel::is_homogeneous() const {
  return std::all_of(matrices_.begin(), matrices_.end(),
                     [&](const TransitionMatrix& t) { return t == matrices_.front(); });
}

TransitionMatrix aggregate_majority(const TransitionMatrix& t, int k) {
  if (t.classes() != 2)
    throw DomainError("exact majority aggregation is binary only; use aggregate_majority_mc");
  if (k < 1 || k % 2 == 0)
    throw DomainError("exact majority aggregation needs odd K >= 1, got " + std::to_string(k));
  std::vector<double> rows(4);
  for (int p = 0; p < 2; ++p) {
    // The flipped label wins when more than (K-1)/2 annotators report it; the
    // diagonal takes the complement so rows stay stochastic to rounding.
    const double keep = t(p, p), flip = t(p, 1 - p);
    double sum = 0.0;
    for (int i = (k + 1) / 2; i <= k; ++i)
      sum += binomial_coefficient(k, i) * std::pow(flip, i) * std::pow(keep, k - i);
    sum = std::clamp(sum, 0.0, 1.0);
    rows[static_cast<std::size_t>(p) * 2 + (1 - p)] = sum;
    rows[static_cast<std::size_t>(p) * 2 + p] = 1.0 - sum;
  }
  return TransitionMatrix::from_rows(2, std::move(rows), 1e-12);
}

TransitionMatrix aggregate_majority_mc(const AnnotatorPanel& panel, std::uint64_t trials,
                                       std::uint64_t seed) {
  if (trials < 1) throw DomainError("Monte Carlo aggregation needs trials >= 1");
  const int m = panel.classes();
  const std::size_t k = panel.size();
  std::vector<double> rows(static_cast<std::size_t>(m) * m, 0.0);

  if (m == 2) {
    // Two 32-bit Bernoulli draws per 64-bit word; flip probabilities are
    // quantized to 2^-32.
    std::vector<std::uint64_t> threshold(k);
    for (int c = 0; c < 2; ++c) {
      for (std::size_t j = 0; j < k; ++j)
        threshold[j] = static_cast<std::uint64_t>(std::ldexp(panel[j](c, 1 - c), 32));
      Rng rng(mix_seed(seed, static_cast<std::uint64_t>(c)));
      std::uint64_t wins_other = 0;
      for (std::uint64_t t = 0; t < trials; ++t) {
        std::size_t flips = 0;
        std::size_t j = 0;
        for (; j + 1 < k; j += 2) {
          const std::uint64_t bits = rng.next_u64();
          flips += (bits & 0xFFFFFFFFULL) < threshold[j];
          flips += (bits >> 32) < threshold[j + 1];
        }
        if (j < k) flips += (rng.next_u64() & 0xFFFFFFFFULL) < threshold[j];
        const std::size_t keep = k - flips;
        const int winner = flips > keep ? 1 - c : (flips == keep ? 0 : c);
        wins_other += winner != c;
      }
      const double frac = static_cast<double>(wins_other) / static_cast<double>(trials);
      rows[static_cast<std::size_t>(c) * 2 + (1 - c)] = frac;
      rows[static_cast<std::size_t>(c) * 2 + c] = 1.0 - frac;
    }
    return TransitionMatrix::from_rows(2, std::move(rows), 1e-12);
  }

  std::vector<int> counts(m);
  std::vector<std::uint64_t> wins(m);
  for (int c = 0; c < m; ++c) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(c)));
    std::fill(wins.begin(), wins.end(), 0);
    for (std::uint64_t t = 0; t < trials; ++t) {
      std::fill(counts.begin(), counts.end(), 0);
      for (std::size_t j = 0; j < k; ++j) {
        const auto r = panel[j].row(c);
        const double u = rng.uniform();
        double acc = 0.0;
        int label = m - 1;
        for (int l = 0; l < m; ++l) {
          acc += r[l];
          if (u < acc) {
            label = l;
            break;
          }
        }
        ++counts[label];
      }
      ++wins[vote_winner(counts)];
    }
    for (int l = 0; l < m; ++l)
      rows[static_cast<std::size_t>(c) * m + l] =
          static_cast<double>(wins[l]) / static_cast<double>(trials);
  }
  return TransitionMatrix::from_rows(m, std::move(rows), 1e-9);
}

SquareMatrix invert_transition(const TransitionMatrix& t) {
  const int m = t.classes();
  SquareMatrix inv{m, std::vector<double>(static_cast<std::size_t>(m) * m)};
  if (m == 2) {
    const double r0 = t.rho0(), r1 = t.rho1();
    const double det = 1.0 - r0 - r1;
    if (!(det > 0.0))
      throw SingularityError("transition matrix " + t.to_string() +
                             " is not invertible under rho0 + rho1 < 1 (rho0 + rho1 = " +
                             fmt_num(r0 + r1) + ")");
    inv(0, 0) = (1.0 - r1) / det;
    inv(0, 1) = -r0 / det;
    inv(1, 0) = -r1 / det;
    inv(1, 1) = (1.0 - r0) / det;
  } else {
    const Eigen::MatrixXd a = to_eigen(t);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    if (!(smin > 0.0) || sv(0) / smin > 1e12)
      throw SingularityError("transition matrix " + t.to_string() +
                             " is singular (condition number " +
                             fmt_num(smin > 0.0 ? sv(0) / smin : INFINITY) + ")");
    const Eigen::MatrixXd b = a.fullPivLu().inverse();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) inv(i, j) = b(i, j);
  }
  // T * T^-1 must reproduce the identity.
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      for (int l = 0; l < m; ++l) s += t(i, l) * inv(l, j);
      if (std::abs(s - (i == j ? 1.0 : 0.0)) > 1e-8)
        throw NumericError("inverse of " + t.to_string() + " fails the identity check");
    }
  }
  return inv;
}

double min_eigenvalue(const TransitionMatrix& t) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver;
  solver.setMaxIterations(1000);
  solver.compute(to_eigen(t), /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success)
    throw NumericError("eigenvalue solver did not converge for " + t.to_string());
  const auto values = solver.eigenvalues();
  double lo = values(0).real();
  for (Eigen::Index i = 1; i < values.size(); ++i) lo = std::min(lo, values(i).real());
  return lo;
}

void NoiseSpec::validate() const {
  if (m < 2) throw DomainError("noise spec needs m >= 2");
  if (const auto* s = std::get_if<SymmetricNoise>(&kind)) {
    if (!(s->epsilon >= 0.0 && s->epsilon <= 1.0))
      throw DomainError("symmetric epsilon = " + fmt_num(s->epsilon) + " outside [0,1]");
  } else if (const auto* e = std::get_if<ExplicitNoise>(&kind)) {
    if (e->matrix.classes() != m) throw DomainError("explicit noise matrix has the wrong class count");
  } else {
    const auto& in = std::get<InstanceNoise>(kind);
    if (!(in.clip_lo >= 0.0 && in.clip_lo <= in.clip_hi && in.clip_hi <= 0.49))
      throw DomainError("instance clip range [" + fmt_num(in.clip_lo) + ", " + fmt_num(in.clip_hi) +
                        "] must lie inside [0, 0.49]");
    if (!(in.epsilon >= 0.0 && in.epsilon <= 1.0))
      throw DomainError("instance epsilon = " + fmt_num(in.epsilon) + " outside [0,1]");
  }
}

namespace {

void check_labels(std::span<const int> clean, int m) {
  for (std::size_t n = 0; n < clean.size(); ++n)
    if (clean[n] < 0 || clean[n] >= m)
      throw DomainError("clean label " + std::to_string(clean[n]) + " at row " + std::to_string(n) +
                        " outside [0, " + std::to_string(m) + ")");
}

int draw_from_row(std::span<const double> row, double u) {
  double acc = 0.0;
  int last_positive = 0;
  for (int l = 0; l < static_cast<int>(row.size()); ++l) {
    if (row[l] > 0.0) last_positive = l;
    acc += row[l];
    if (u < acc) return l;
  }
  return last_positive;
}

}  // namespace

LabelMatrix sample_noisy_labels(std::span<const int> clean, const AnnotatorPanel& panel,
                                std::uint64_t seed) {
  const int m = panel.classes();
  check_labels(clean, m);
  const std::size_t n = clean.size(), k = panel.size();
  LabelMatrix out(n, k, m);
  for (std::size_t j = 0; j < k; ++j) {
    Rng rng(mix_seed(seed, j));
    for (std::size_t i = 0; i < n; ++i) out(i, j) = draw_from_row(panel[j].row(clean[i]), rng.uniform());
  }
  return out;
}

std::vector<double> instance_flip_rates(const FeatureView& features, const InstanceNoise& noise,
                                        std::size_t annotator) {
  const std::size_t d = features.dim;
  const std::size_t n = d ? features.data.size() / d : 0;
  std::vector<double> rates(n, noise.epsilon);
  if (n == 0 || d == 0) return rates;

  Rng prng(mix_seed(noise.projection_seed, annotator));
  std::vector<double> u(d);
  double norm = 0.0;
  for (auto& v : u) {
    v = prng.normal();
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (auto& v : u) v /= norm;

  std::vector<double> z(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += u[c] * features.data[i * d + c];
    z[i] = s;
    mean += s;
  }
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : z) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  for (auto& v : z) v = sd > 0.0 ? (v - mean) / sd : 0.0;

  const double spread = noise.spread < 0.0 ? 0.5 * noise.epsilon : noise.spread;
  auto mean_rate = [&](double shift) {
    double s = 0.0;
    for (double v : z) s += std::clamp(noise.epsilon + shift + spread * v, noise.clip_lo, noise.clip_hi);
    return s / static_cast<double>(n);
  };
  // Mean of the clipped rate is non-decreasing in the shift; bisect for epsilon.
  double lo = -1.0, hi = 1.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_rate(mid) < noise.epsilon ? lo : hi) = mid;
  }
  const double shift = 0.5 * (lo + hi);
  for (std::size_t i = 0; i < n; ++i)
    rates[i] = std::clamp(noise.epsilon + shift + spread * z[i], noise.clip_lo, noise.clip_hi);
  return rates;
}

LabelMatrix sample_noisy_labels(std::span<const int> clean, const FeatureView* features,
                                const NoiseSpec& spec, std::size_t k, std::uint64_t seed) {
  spec.validate();
  if (const auto* s = std::get_if<SymmetricNoise>(&spec.kind))
    return sample_noisy_labels(clean, AnnotatorPanel::identical(make_symmetric(s->epsilon, spec.m), k), seed);
  if (const auto* e = std::get_if<ExplicitNoise>(&spec.kind))
    return sample_noisy_labels(clean, AnnotatorPanel::identical(e->matrix, k), seed);

  const auto& noise = std::get<InstanceNoise>(spec.kind);
  if (!features) throw DomainError("instance-dependent noise needs features");
  if (features->dim == 0 || features->data.size() != clean.size() * features->dim)
    throw DomainError("feature block does not match the label count");
  check_labels(clean, spec.m);
  const std::size_t n = clean.size();
  LabelMatrix out(n, k, spec.m);
  for (std::size_t j = 0; j < k; ++j) {
    const auto rates = instance_flip_rates(*features, noise, j);
    Rng rng(mix_seed(seed, j));
    for (std::size_t i = 0; i < n; ++i) {
      int label = clean[i];
      if (rng.uniform() < rates[i]) {
        const int other = static_cast<int>(rng.index(static_cast<std::uint64_t>(spec.m - 1)));
        label = other >= clean[i] ? other + 1 : other;
      }
      out(i, j) = label;
    }
  }
  return out;
}

}  // namespace sepagg
