#include "sepagg/report.hpp"

#include <charconv>
#include <ostream>

#include "sepagg/error.hpp"

namespace sepagg {

using nlohmann::json;

json to_json(const TransitionMatrix& t) {
  json rows = json::array();
  for (int i = 0; i < t.classes(); ++i) rows.push_back(std::vector<double>(t.row(i).begin(), t.row(i).end()));
  return rows;
}

json to_json(const VarianceBound& v) {
  json j{{"defined", v.defined}, {"argument", v.argument}};
  j["value"] = v.defined ? json(v.value) : json(nullptr);
  if (!v.defined) j["reason"] = v.reason;
  return j;
}

json to_json(const BoundReport& r) {
  json j{{"treatment", to_string(r.treatment)},
         {"loss", to_string(r.family)},
         {"total", r.total},
         {"eta", r.eta},
         {"l0", r.l0},
         {"lipschitz_total", r.lipschitz_total},
         {"rademacher", r.rademacher},
         {"t", to_json(r.t)},
         {"variance", to_json(r.variance)}};
  if (r.shift) j["shift"] = *r.shift;
  if (r.estimation) j["estimation"] = *r.estimation;
  return j;
}

json to_json(const DecisionReport& r) {
  json j{{"loss", to_string(r.family)},
         {"recommendation", to_string(r.recommendation)},
         {"via", to_string(r.via)},
         {"alpha_k", r.alpha_k},
         {"gamma", r.gamma},
         {"eta_sep", r.eta_sep},
         {"beta_k", r.beta_k},
         {"direct_verdict", r.direct_verdict ? "separate" : "aggregate"},
         {"separate", to_json(r.separate)},
         {"aggregate", to_json(r.aggregate)}};
  j["lhs"] = r.lhs ? json(*r.lhs) : json(nullptr);
  j["condition_verdict"] = r.condition_verdict ? json(*r.condition_verdict ? "separate" : "aggregate") : json(nullptr);
  return j;
}

json to_json(const Metrics& m) {
  return json{{"epoch_loss", m.epoch_loss},
              {"best_test_accuracy", m.best_test_accuracy},
              {"final_test_accuracy", m.final_test_accuracy},
              {"epochs_run", m.epochs_run},
              {"seed", m.seed}};
}

json to_json(const AggregationResult& r) {
  json j{{"classes", r.classes},
         {"iterations", r.iterations},
         {"converged", r.converged},
         {"class_priors", r.class_priors},
         {"log_likelihood", r.log_likelihood},
         {"objective", r.objective}};
  json conf = json::array();
  for (const auto& c : r.annotator_confusions) {
    json rows = json::array();
    for (int i = 0; i < c.m; ++i)
      rows.push_back(std::vector<double>(c.data.begin() + i * c.m, c.data.begin() + (i + 1) * c.m));
    conf.push_back(rows);
  }
  j["annotator_confusions"] = conf;
  return j;
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

void attach_aggregation(Dataset& data, const AggregationResult& result) {
  const std::size_t n = data.size();
  if (result.labels.size() != n) throw DomainError("aggregation does not match the dataset rows");
  data.set_extra("y_hat", std::vector<double>(result.labels.begin(), result.labels.end()));
  for (int c = 0; c < result.classes; ++c) {
    std::vector<double> col(n);
    for (std::size_t i = 0; i < n; ++i) col[i] = result.posterior(i, c);
    data.set_extra("p" + std::to_string(c), std::move(col));
  }
}

namespace {

std::vector<int> odd_range(int lo, int hi) {
  std::vector<int> out;
  for (int k = lo; k <= hi; k += 2) out.push_back(k);
  return out;
}

}  // namespace

std::vector<Figure1Row> default_figure1() {
  return figure1_data({0.1, 0.2, 0.3, 0.4}, odd_range(1, 49));
}

std::vector<Figure2Row> default_figure2() {
  return figure2_data({0.01, 0.05, 0.1, 0.2}, odd_range(1, 99));
}

std::vector<Figure3Row> default_figure3(LhsForm form) {
  ProblemSpec base;
  base.n = 2000;
  base.vc_dim = 10;
  return figure3_data(base, {0.2, 0.3, 0.4}, {3, 5, 7, 9},
                      {LossFamily::ce, LossFamily::backward, LossFamily::peer}, form);
}

void write_figure1_csv(const std::vector<Figure1Row>& rows, std::ostream& out) {
  out << "epsilon,k,aggregated_rate\n";
  for (const auto& r : rows) out << format_number(r.epsilon) << ',' << r.k << ',' << format_number(r.aggregated_rate) << '\n';
}

void write_figure2_csv(const std::vector<Figure2Row>& rows, std::ostream& out) {
  out << "delta,k,eta\n";
  for (const auto& r : rows) out << format_number(r.delta) << ',' << r.k << ',' << format_number(r.eta) << '\n';
}

void write_figure3_csv(const std::vector<Figure3Row>& rows, std::ostream& out) {
  out << "loss,epsilon,k,lhs\n";
  for (const auto& r : rows) {
    out << short_name(r.family) << ',' << format_number(r.epsilon) << ',' << r.k << ',';
    if (r.lhs) out << format_number(*r.lhs);
    out << '\n';
  }
}

const char* short_name(LossFamily f) {
  switch (f) {
    case LossFamily::ce: return "ce";
    case LossFamily::backward: return "bw";
    case LossFamily::peer: return "pl";
  }
  return "?";
}

LossFamily parse_loss_family(const std::string& s) {
  if (s == "ce") return LossFamily::ce;
  if (s == "bw" || s == "backward") return LossFamily::backward;
  if (s == "pl" || s == "peer") return LossFamily::peer;
  throw DomainError("unknown loss '" + s + "' (expected ce, bw or pl)");
}

TrainTreatment parse_train_treatment(const std::string& s) {
  if (s == "sep" || s == "separate") return TrainTreatment::separate;
  if (s == "mv") return TrainTreatment::majority_vote;
  if (s == "em") return TrainTreatment::em;
  throw DomainError("unknown treatment '" + s + "' (expected sep, mv or em)");
}

}  // namespace sepagg
