#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "sepagg/aggregation.hpp"
#include "sepagg/bounds.hpp"
#include "sepagg/dataset.hpp"
#include "sepagg/trainer.hpp"

namespace sepagg {

nlohmann::json to_json(const TransitionMatrix& t);
nlohmann::json to_json(const VarianceBound& v);
nlohmann::json to_json(const BoundReport& r);
nlohmann::json to_json(const DecisionReport& r);
nlohmann::json to_json(const Metrics& m);
/// Diagnostics only: iterations, convergence, traces, priors, confusions.
nlohmann::json to_json(const AggregationResult& r);

/// Shortest decimal that round-trips to the same double.
std::string format_number(double v);

/// Adds `y_hat` and `p0..p{M-1}` extra columns from an aggregation.
void attach_aggregation(Dataset& data, const AggregationResult& result);

/// Default grids of the three figure tables.
std::vector<Figure1Row> default_figure1();
std::vector<Figure2Row> default_figure2();
std::vector<Figure3Row> default_figure3(LhsForm form = LhsForm::order_proxy);

/// Header `epsilon,k,aggregated_rate`.
void write_figure1_csv(const std::vector<Figure1Row>& rows, std::ostream& out);
/// Header `delta,k,eta`.
void write_figure2_csv(const std::vector<Figure2Row>& rows, std::ostream& out);
/// Header `loss,epsilon,k,lhs`; undefined points leave `lhs` empty.
void write_figure3_csv(const std::vector<Figure3Row>& rows, std::ostream& out);

/// Short flag names used on the command line: ce, bw, pl.
const char* short_name(LossFamily f);
/// Accepts ce|bw|pl and the long names; throws DomainError otherwise.
LossFamily parse_loss_family(const std::string& s);
/// Accepts sep|mv|em; throws DomainError otherwise.
TrainTreatment parse_train_treatment(const std::string& s);

}  // namespace sepagg
