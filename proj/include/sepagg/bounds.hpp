#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sepagg/transition.hpp"

namespace sepagg {

enum class Treatment { separate, aggregate };
enum class LossFamily { ce, backward, peer };

/// Multiplier in front of sqrt(M)/lambda_min in the multi-class backward
/// constant. The main-text statement carries a factor 2; the derivation in
/// the proof arrives at 1.
enum class BackwardConstant { main_text, appendix };

const char* to_string(Treatment t);
const char* to_string(LossFamily f);

/// Every scalar that feeds the bounds.
struct ProblemSpec {
  double n = 1000;       ///< sample count N
  int k = 1;             ///< annotators K
  int m = 2;             ///< classes M
  double delta = 0.05;   ///< confidence
  double vc_dim = 1;     ///< VC dimension d
  std::vector<double> priors{0.5, 0.5};
  double loss_lo = 0.0;
  double loss_hi = 1.0;
  double lipschitz = 1.0;
  TransitionMatrix t_base = TransitionMatrix::identity(2);
  /// Aggregated matrix override. When absent it is derived from t_base:
  /// exactly for binary/odd K, by seeded Monte Carlo otherwise.
  std::optional<TransitionMatrix> t_aggregate;
  BackwardConstant backward_constant = BackwardConstant::main_text;
  std::uint64_t mc_trials = 200000;
  std::uint64_t mc_seed = 0;

  void validate() const;
  double loss_range() const { return loss_hi - loss_lo; }
};

/// T for the treatment: t_base for separation, the majority-vote matrix for
/// aggregation.
TransitionMatrix treatment_matrix(const ProblemSpec& spec, Treatment treatment);

/// K ln(1/delta) / (2 ln((K+1)/delta)^2), unclipped.
double richness_factor_raw(int k, double delta);
/// 1 for aggregation; the raw separation factor clipped below at 1.
double richness_factor(int k, double delta, Treatment treatment);

/// sqrt(2 d ln N / N).
double rademacher_upper(double vc_dim, double n);

/// Label-flip mass weighted by the class priors: sum_j p_j (1 - T_jj).
double weighted_flip_mass(const std::vector<double>& priors, const TransitionMatrix& t);
/// Distribution-shift term: weighted flip mass times the loss range.
double shift_bound(const ProblemSpec& spec, const TransitionMatrix& t);
/// 4 L R + range * sqrt(2 ln(1/delta) / (eta N)) + shift.
double estimation_bound(const ProblemSpec& spec, Treatment treatment, const TransitionMatrix& t);

/// Range constant of the backward-corrected 0-1 loss.
double l0_backward(const TransitionMatrix& t, BackwardConstant constant = BackwardConstant::main_text);
/// 1 / (1 - sum of the per-class flip rates). Multi-class matrices must have
/// constant off-diagonal columns (T_ji = rho_i for j != i).
double l0_peer(const TransitionMatrix& t);

/// g(x) = x - x^2.
double variance_map(double x);

struct VarianceBound {
  bool defined = false;
  double argument = 0.0;  ///< risk bound fed to g
  double value = 0.0;     ///< g(argument), valid when defined
  std::string reason;     ///< why the precondition failed
};

struct BoundReport {
  Treatment treatment = Treatment::separate;
  LossFamily family = LossFamily::ce;
  std::optional<double> shift;       ///< ce only
  std::optional<double> estimation;  ///< ce only
  double total = 0.0;
  VarianceBound variance;
  double eta = 1.0;
  double l0 = 1.0;            ///< 1 for ce
  double lipschitz_total = 0; ///< l0 * L
  double rademacher = 0.0;
  TransitionMatrix t = TransitionMatrix::identity(2);
};

BoundReport total_bound_ce(const ProblemSpec& spec, Treatment treatment);
BoundReport bound_backward(const ProblemSpec& spec, Treatment treatment);
BoundReport bound_peer(const ProblemSpec& spec, Treatment treatment);
BoundReport bound(const ProblemSpec& spec, Treatment treatment, LossFamily family);

VarianceBound variance_bound(const ProblemSpec& spec, Treatment treatment, LossFamily family);

enum class DecisionVia { condition, direct_comparison };
const char* to_string(DecisionVia v);

struct DecisionReport {
  LossFamily family = LossFamily::ce;
  double alpha_k = 0.0;
  double gamma = 0.0;
  std::optional<double> lhs;  ///< empty when beta_k - eta^-1/2 <= 0
  double eta_sep = 1.0;
  double beta_k = 1.0;
  Treatment recommendation = Treatment::aggregate;
  DecisionVia via = DecisionVia::direct_comparison;
  /// Verdict of the closed-form condition (true = separate), when defined.
  std::optional<bool> condition_verdict;
  /// Verdict of comparing the two totals (true = separate).
  bool direct_verdict = false;
  BoundReport separate;
  BoundReport aggregate;
};

/// Totals within this absolute distance count as a tie, and ties go to aggregation.
inline constexpr double kTieTolerance = 1e-12;

DecisionReport decide(const ProblemSpec& spec, LossFamily family);

/// How eta^-1/2 enters a curve of the condition left-hand side.
enum class LhsForm {
  /// Clipped richness factor; undefined wherever it clips to 1.
  exact,
  /// Asymptotic order log10(K)/sqrt(K), the shape the trend plots use.
  order_proxy,
};

struct LhsPoint {
  int k = 0;
  std::optional<double> lhs;
};

std::vector<LhsPoint> condition_lhs_curve(const ProblemSpec& spec, LossFamily family,
                                          const std::vector<int>& k_values,
                                          LhsForm form = LhsForm::order_proxy);

struct Figure1Row {
  double epsilon;
  int k;
  double aggregated_rate;
};
/// Aggregated binary symmetric noise rate per (epsilon, K). K must be odd.
std::vector<Figure1Row> figure1_data(const std::vector<double>& epsilons, const std::vector<int>& k_values);

struct Figure2Row {
  double delta;
  int k;
  double eta;
};
std::vector<Figure2Row> figure2_data(const std::vector<double>& deltas, const std::vector<int>& k_values);

struct Figure3Row {
  LossFamily family;
  double epsilon;
  int k;
  std::optional<double> lhs;
};
/// Condition LHS for symmetric binary noise; other fields come from `base`.
std::vector<Figure3Row> figure3_data(const ProblemSpec& base, const std::vector<double>& epsilons,
                                     const std::vector<int>& k_values,
                                     const std::vector<LossFamily>& families,
                                     LhsForm form = LhsForm::order_proxy);

}  // namespace sepagg
