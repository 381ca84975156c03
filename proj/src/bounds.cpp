#include "sepagg/bounds.hpp"

#include <cmath>
#include <sstream>

#include "sepagg/error.hpp"

namespace sepagg {

namespace {

std::string num(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

void require_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta = " + num(delta) + " outside (0,1)");
}

// Binary matrices with rho0 + rho1 >= 1 make every constant below blow up.
void require_invertible_binary(const TransitionMatrix& t, const char* which) {
  if (t.classes() == 2 && !(t.rho0() + t.rho1() < 1.0))
    throw SingularityError(std::string(which) + " matrix " + t.to_string() +
                           " has rho0 + rho1 >= 1; the bound constants are undefined");
}

}  // namespace

const char* to_string(Treatment t) { return t == Treatment::separate ? "separate" : "aggregate"; }

const char* to_string(LossFamily f) {
  switch (f) {
    case LossFamily::ce: return "ce";
    case LossFamily::backward: return "backward";
    case LossFamily::peer: return "peer";
  }
  return "?";
}

const char* to_string(DecisionVia v) {
  return v == DecisionVia::condition ? "condition" : "direct_comparison";
}

void ProblemSpec::validate() const {
  if (!(n >= 2)) throw DomainError("N must be >= 2");
  if (k < 1) throw DomainError("K must be >= 1");
  if (m < 2) throw DomainError("M must be >= 2");
  require_delta(delta);
  if (!(vc_dim >= 1)) throw DomainError("VC dimension must be >= 1");
  if (priors.size() != static_cast<std::size_t>(m))
    throw DomainError("priors have " + std::to_string(priors.size()) + " entries, expected " + std::to_string(m));
  double sum = 0.0;
  for (double p : priors) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("prior " + num(p) + " outside [0,1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw DomainError("priors sum to " + num(sum));
  if (!(loss_hi > loss_lo)) throw DomainError("loss upper bound must exceed the lower bound");
  if (!(lipschitz > 0.0)) throw DomainError("Lipschitz constant must be positive");
  if (t_base.classes() != m) throw DomainError("base transition matrix does not have M classes");
  if (t_aggregate && t_aggregate->classes() != m)
    throw DomainError("aggregated transition matrix does not have M classes");
}

TransitionMatrix treatment_matrix(const ProblemSpec& spec, Treatment treatment) {
  if (treatment == Treatment::separate) return spec.t_base;
  if (spec.t_aggregate) return *spec.t_aggregate;
  if (spec.m == 2 && spec.k % 2 == 1) return aggregate_majority(spec.t_base, spec.k);
  return aggregate_majority_mc(AnnotatorPanel::identical(spec.t_base, static_cast<std::size_t>(spec.k)),
                               spec.mc_trials, spec.mc_seed);
}

double richness_factor_raw(int k, double delta) {
  if (k < 1) throw DomainError("K must be >= 1");
  require_delta(delta);
  const double l = std::log((k + 1) / delta);
  return k * std::log(1.0 / delta) / (2.0 * l * l);
}

double richness_factor(int k, double delta, Treatment treatment) {
  const double raw = richness_factor_raw(k, delta);
  return treatment == Treatment::aggregate ? 1.0 : std::max(raw, 1.0);
}

double rademacher_upper(double vc_dim, double n) {
  if (!(n >= 2)) throw DomainError("Rademacher bound needs N >= 2");
  return std::sqrt(2.0 * vc_dim * std::log(n) / n);
}

double weighted_flip_mass(const std::vector<double>& priors, const TransitionMatrix& t) {
  if (priors.size() != static_cast<std::size_t>(t.classes()))
    throw DomainError("priors and transition matrix disagree on the class count");
  double s = 0.0;
  for (int j = 0; j < t.classes(); ++j) s += priors[j] * t.off_diagonal_mass(j);
  return s;
}

double shift_bound(const ProblemSpec& spec, const TransitionMatrix& t) {
  return weighted_flip_mass(spec.priors, t) * spec.loss_range();
}

double estimation_bound(const ProblemSpec& spec, Treatment treatment, const TransitionMatrix& t) {
  const double eta = richness_factor(spec.k, spec.delta, treatment);
  return 4.0 * spec.lipschitz * rademacher_upper(spec.vc_dim, spec.n) +
         spec.loss_range() * std::sqrt(2.0 * std::log(1.0 / spec.delta) / (eta * spec.n)) +
         shift_bound(spec, t);
}

double l0_backward(const TransitionMatrix& t, BackwardConstant constant) {
  const int m = t.classes();
  if (m == 2) {
    const double r0 = t.rho0(), r1 = t.rho1();
    if (!(r0 + r1 < 1.0))
      throw SingularityError("backward constant undefined for " + t.to_string() + " (rho0 + rho1 >= 1)");
    return (1.0 + std::abs(r0 - r1)) / (1.0 - r0 - r1);
  }
  double e = 0.0;
  for (int i = 0; i < m; ++i) {
    const double off = t.off_diagonal_mass(i);
    if (!(t(i, i) > off))
      throw DomainError("backward constant needs a diagonally dominant matrix; row " + std::to_string(i) +
                        " of " + t.to_string() + " is not");
    e = std::max(e, off);
  }
  const double lambda = min_eigenvalue(t);
  if (!(lambda > 0.0))
    throw SingularityError("backward constant undefined: minimal eigenvalue " + num(lambda) + " <= 0");
  const double factor = constant == BackwardConstant::main_text ? 2.0 : 1.0;
  const double spectral = factor * std::sqrt(static_cast<double>(m)) / lambda;
  return e < 0.5 ? std::min(1.0 / (1.0 - 2.0 * e), spectral) : spectral;
}

double l0_peer(const TransitionMatrix& t) {
  const int m = t.classes();
  double total = 0.0;
  if (m == 2) {
    total = t.rho0() + t.rho1();
  } else {
    for (int i = 0; i < m; ++i) {
      const int ref = i == 0 ? 1 : 0;
      const double rho = t(ref, i);
      for (int j = 0; j < m; ++j)
        if (j != i && std::abs(t(j, i) - rho) > 1e-12)
          throw DomainError("peer constant needs constant off-diagonal columns; column " + std::to_string(i) +
                            " of " + t.to_string() + " varies");
      total += rho;
    }
  }
  if (!(total < 1.0))
    throw DomainError("peer constant undefined for " + t.to_string() + " (flip rates sum to " + num(total) + ")");
  return 1.0 / (1.0 - total);
}

double variance_map(double x) { return x - x * x; }

namespace {

VarianceBound finish_variance(bool precondition, double argument, std::string reason) {
  VarianceBound v;
  v.argument = argument;
  if (!precondition) {
    v.reason = std::move(reason);
  } else if (!(argument <= 0.5)) {
    v.reason = "risk bound " + num(argument) + " exceeds 1/2";
  } else {
    v.defined = true;
    v.value = variance_map(argument);
  }
  return v;
}

VarianceBound variance_for(const ProblemSpec& spec, double eta, double l0, LossFamily family) {
  const double n = spec.n, range = spec.loss_range();
  switch (family) {
    case LossFamily::ce: {
      const double need = 2.0 * std::log(1.0 / spec.delta) / n;
      return finish_variance(eta >= need, std::sqrt(2.0 * std::log(1.0 / spec.delta) / (eta * n)),
                             "eta " + num(eta) + " < 2 ln(1/delta)/N = " + num(need));
    }
    case LossFamily::backward: {
      const double lhs = l0 / std::sqrt(eta);
      const double rhs = std::sqrt(n / (2.0 * range * range * std::log(1.0 / spec.delta)));
      return finish_variance(lhs < rhs, l0 * range * std::sqrt(2.0 * std::log(1.0 / spec.delta) / (eta * n)),
                             "L0 eta^-1/2 = " + num(lhs) + " >= " + num(rhs));
    }
    case LossFamily::peer: {
      const double rhs = std::sqrt(2.0 * std::log(4.0 / spec.delta) / n) * (1.0 + 2.0 * range) * l0;
      return finish_variance(std::sqrt(eta) >= rhs,
                             l0 * std::sqrt(std::log(4.0 / spec.delta) / (2.0 * eta * n)) * (1.0 + 2.0 * range),
                             "sqrt(eta) = " + num(std::sqrt(eta)) + " < " + num(rhs));
    }
  }
  return {};
}

BoundReport start_report(const ProblemSpec& spec, Treatment treatment, LossFamily family) {
  spec.validate();
  BoundReport r;
  r.treatment = treatment;
  r.family = family;
  r.t = treatment_matrix(spec, treatment);
  r.eta = richness_factor(spec.k, spec.delta, treatment);
  r.rademacher = rademacher_upper(spec.vc_dim, spec.n);
  return r;
}

}  // namespace

BoundReport total_bound_ce(const ProblemSpec& spec, Treatment treatment) {
  BoundReport r = start_report(spec, treatment, LossFamily::ce);
  r.l0 = 1.0;
  r.lipschitz_total = spec.lipschitz;
  r.shift = shift_bound(spec, r.t);
  r.estimation = estimation_bound(spec, treatment, r.t);
  r.total = *r.shift + *r.estimation;
  r.variance = variance_for(spec, r.eta, r.l0, LossFamily::ce);
  return r;
}

BoundReport bound_backward(const ProblemSpec& spec, Treatment treatment) {
  BoundReport r = start_report(spec, treatment, LossFamily::backward);
  r.l0 = l0_backward(r.t, spec.backward_constant);
  r.lipschitz_total = r.l0 * spec.lipschitz;
  r.total = 4.0 * r.lipschitz_total * r.rademacher +
            r.l0 * spec.loss_range() * std::sqrt(2.0 * std::log(1.0 / spec.delta) / (r.eta * spec.n));
  r.variance = variance_for(spec, r.eta, r.l0, LossFamily::backward);
  return r;
}

BoundReport bound_peer(const ProblemSpec& spec, Treatment treatment) {
  BoundReport r = start_report(spec, treatment, LossFamily::peer);
  r.l0 = l0_peer(r.t);
  r.lipschitz_total = r.l0 * spec.lipschitz;
  r.total = 8.0 * r.lipschitz_total * r.rademacher +
            r.l0 * std::sqrt(2.0 * std::log(4.0 / spec.delta) / (r.eta * spec.n)) * (1.0 + 2.0 * spec.loss_range());
  r.variance = variance_for(spec, r.eta, r.l0, LossFamily::peer);
  return r;
}

BoundReport bound(const ProblemSpec& spec, Treatment treatment, LossFamily family) {
  switch (family) {
    case LossFamily::ce: return total_bound_ce(spec, treatment);
    case LossFamily::backward: return bound_backward(spec, treatment);
    case LossFamily::peer: return bound_peer(spec, treatment);
  }
  throw DomainError("unknown loss family");
}

VarianceBound variance_bound(const ProblemSpec& spec, Treatment treatment, LossFamily family) {
  return bound(spec, treatment, family).variance;
}

namespace {

struct ConditionTerms {
  double alpha = 0.0;
  double beta = 1.0;
  double gamma = 0.0;
};

// alpha_K, beta_K and gamma for a family, given both treatment reports.
ConditionTerms condition_terms(const ProblemSpec& spec, LossFamily family, const BoundReport& sep,
                               const BoundReport& agg) {
  ConditionTerms c;
  const double log_n = std::log(spec.n);
  switch (family) {
    case LossFamily::ce:
      c.alpha = weighted_flip_mass(spec.priors, sep.t) - weighted_flip_mass(spec.priors, agg.t);
      c.gamma = std::sqrt(std::log(1.0 / spec.delta) / (2.0 * spec.n));
      break;
    case LossFamily::backward:
      c.alpha = 1.0 - agg.lipschitz_total / sep.lipschitz_total;
      c.gamma = 1.0 / (1.0 + (4.0 * spec.lipschitz / spec.loss_range()) *
                                 std::sqrt(spec.vc_dim * log_n / std::log(1.0 / spec.delta)));
      break;
    case LossFamily::peer:
      c.alpha = 1.0 - agg.lipschitz_total / sep.lipschitz_total;
      c.beta = agg.lipschitz_total / sep.lipschitz_total;
      // Ratio of the confidence term to the complexity term of the peer bound;
      // makes the condition exactly equivalent to comparing the two totals.
      c.gamma = (1.0 + 2.0 * spec.loss_range()) / (8.0 * spec.lipschitz) *
                std::sqrt(std::log(4.0 / spec.delta) / (spec.vc_dim * log_n));
      break;
  }
  return c;
}

}  // namespace

DecisionReport decide(const ProblemSpec& spec, LossFamily family) {
  spec.validate();
  DecisionReport d;
  d.family = family;
  const TransitionMatrix t_sep = treatment_matrix(spec, Treatment::separate);
  const TransitionMatrix t_agg = treatment_matrix(spec, Treatment::aggregate);
  require_invertible_binary(t_sep, "base");
  require_invertible_binary(t_agg, "aggregated");

  ProblemSpec fixed = spec;
  fixed.t_aggregate = t_agg;
  d.separate = bound(fixed, Treatment::separate, family);
  d.aggregate = bound(fixed, Treatment::aggregate, family);

  const ConditionTerms terms = condition_terms(fixed, family, d.separate, d.aggregate);
  d.alpha_k = terms.alpha;
  d.beta_k = terms.beta;
  d.gamma = terms.gamma;
  d.eta_sep = d.separate.eta;

  const double gap = d.aggregate.total - d.separate.total;
  d.direct_verdict = gap > kTieTolerance;

  const double denom = terms.beta - 1.0 / std::sqrt(d.eta_sep);
  if (denom > 0.0) {
    d.lhs = terms.alpha / denom;
    d.condition_verdict = *d.lhs <= d.gamma;
  }
  if (d.condition_verdict && std::abs(gap) > kTieTolerance) {
    d.via = DecisionVia::condition;
    d.recommendation = *d.condition_verdict ? Treatment::separate : Treatment::aggregate;
  } else {
    d.via = DecisionVia::direct_comparison;
    d.recommendation = d.direct_verdict ? Treatment::separate : Treatment::aggregate;
  }
  return d;
}

std::vector<LhsPoint> condition_lhs_curve(const ProblemSpec& spec, LossFamily family,
                                          const std::vector<int>& k_values, LhsForm form) {
  std::vector<LhsPoint> out;
  out.reserve(k_values.size());
  for (int k : k_values) {
    ProblemSpec at = spec;
    at.k = k;
    at.validate();
    const TransitionMatrix t_agg = treatment_matrix(at, Treatment::aggregate);
    require_invertible_binary(at.t_base, "base");
    require_invertible_binary(t_agg, "aggregated");
    at.t_aggregate = t_agg;
    const BoundReport sep = bound(at, Treatment::separate, family);
    const BoundReport agg = bound(at, Treatment::aggregate, family);
    const ConditionTerms terms = condition_terms(at, family, sep, agg);
    const double inv_sqrt_eta = form == LhsForm::exact ? 1.0 / std::sqrt(sep.eta)
                                                       : std::log10(static_cast<double>(k)) / std::sqrt(static_cast<double>(k));
    const double denom = terms.beta - inv_sqrt_eta;
    LhsPoint p{k, std::nullopt};
    if (denom > 0.0) p.lhs = terms.alpha / denom;
    out.push_back(p);
  }
  return out;
}

std::vector<Figure1Row> figure1_data(const std::vector<double>& epsilons, const std::vector<int>& k_values) {
  std::vector<Figure1Row> rows;
  for (double eps : epsilons)
    for (int k : k_values)
      rows.push_back({eps, k, aggregate_majority(make_symmetric(eps, 2), k).rho0()});
  return rows;
}

std::vector<Figure2Row> figure2_data(const std::vector<double>& deltas, const std::vector<int>& k_values) {
  std::vector<Figure2Row> rows;
  for (double delta : deltas)
    for (int k : k_values) rows.push_back({delta, k, richness_factor(k, delta, Treatment::separate)});
  return rows;
}

std::vector<Figure3Row> figure3_data(const ProblemSpec& base, const std::vector<double>& epsilons,
                                     const std::vector<int>& k_values,
                                     const std::vector<LossFamily>& families, LhsForm form) {
  std::vector<Figure3Row> rows;
  for (LossFamily family : families) {
    for (double eps : epsilons) {
      ProblemSpec spec = base;
      spec.m = 2;
      spec.priors = {0.5, 0.5};
      spec.t_base = make_symmetric(eps, 2);
      spec.t_aggregate.reset();
      for (const auto& p : condition_lhs_curve(spec, family, k_values, form))
        rows.push_back({family, eps, p.k, p.lhs});
    }
  }
  return rows;
}

}  // namespace sepagg
