#include "sepagg/sepagg.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "json.hpp"
#include "sepagg/aggregation.hpp"
#include "sepagg/bounds.hpp"
#include "sepagg/dataset.hpp"
#include "sepagg/error.hpp"
#include "sepagg/experiment.hpp"
#include "sepagg/report.hpp"
#include "sepagg/rng.hpp"
#include "sepagg/trainer.hpp"
#include "sepagg/transition.hpp"

struct sepagg_transition {
  sepagg::TransitionMatrix t;
};

struct sepagg_dataset {
  sepagg::Dataset d;
};

namespace {

thread_local std::string last_error;

class InvalidArgument : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class F>
sepagg_status guard(F&& f) {
  try {
    f();
    last_error.clear();
    return SEPAGG_OK;
  } catch (const InvalidArgument& e) {
    last_error = e.what();
    return SEPAGG_ERR_INVALID_ARGUMENT;
  } catch (const sepagg::SingularityError& e) {
    last_error = e.what();
    return SEPAGG_ERR_SINGULAR;
  } catch (const sepagg::DomainError& e) {
    last_error = e.what();
    return SEPAGG_ERR_DOMAIN;
  } catch (const sepagg::NumericError& e) {
    last_error = e.what();
    return SEPAGG_ERR_NUMERIC;
  } catch (const sepagg::ParseError& e) {
    last_error = e.what();
    return SEPAGG_ERR_PARSE;
  } catch (const sepagg::IoError& e) {
    last_error = e.what();
    return SEPAGG_ERR_IO;
  } catch (const sepagg::TrainingError& e) {
    last_error = e.what();
    return SEPAGG_ERR_TRAINING;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return SEPAGG_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return SEPAGG_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return SEPAGG_ERR_INTERNAL;
  }
}

void require(const void* p, const char* name) {
  if (!p) throw InvalidArgument(std::string(name) + " is NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

sepagg::LossFamily loss_of(sepagg_loss l) {
  switch (l) {
    case SEPAGG_LOSS_CE: return sepagg::LossFamily::ce;
    case SEPAGG_LOSS_BACKWARD: return sepagg::LossFamily::backward;
    case SEPAGG_LOSS_PEER: return sepagg::LossFamily::peer;
  }
  throw InvalidArgument("unknown loss " + std::to_string(static_cast<int>(l)));
}

template <class T>
T field(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw sepagg::ParseError(std::string("config field ") + key + ": " + e.what(), 0);
  }
}

}  // namespace

extern "C" {

const char* sepagg_version(void) { return "0.1.0"; }

const char* sepagg_last_error(void) { return last_error.c_str(); }

void sepagg_string_free(char* s) { std::free(s); }

sepagg_status sepagg_transition_symmetric(double epsilon, int m, sepagg_transition** out) {
  return guard([&] {
    require(out, "out");
    *out = new sepagg_transition{sepagg::make_symmetric(epsilon, m)};
  });
}

sepagg_status sepagg_transition_binary(double rho0, double rho1, sepagg_transition** out) {
  return guard([&] {
    require(out, "out");
    *out = new sepagg_transition{sepagg::TransitionMatrix::binary(rho0, rho1)};
  });
}

sepagg_status sepagg_transition_from_rows(int m, const double* rows, sepagg_transition** out) {
  return guard([&] {
    require(out, "out");
    require(rows, "rows");
    if (m < 2) throw InvalidArgument("m must be at least 2");
    const std::size_t count = static_cast<std::size_t>(m) * static_cast<std::size_t>(m);
    *out = new sepagg_transition{sepagg::TransitionMatrix::from_rows(m, std::vector<double>(rows, rows + count))};
  });
}

sepagg_status sepagg_transition_aggregate_majority(const sepagg_transition* t, int k, sepagg_transition** out) {
  return guard([&] {
    require(t, "t");
    require(out, "out");
    *out = new sepagg_transition{sepagg::aggregate_majority(t->t, k)};
  });
}

sepagg_status sepagg_transition_aggregate_mc(const sepagg_transition* t, int k, uint64_t trials, uint64_t seed,
                                             sepagg_transition** out) {
  return guard([&] {
    require(t, "t");
    require(out, "out");
    if (k < 1) throw InvalidArgument("k must be at least 1");
    const auto panel = sepagg::AnnotatorPanel::identical(t->t, static_cast<std::size_t>(k));
    *out = new sepagg_transition{sepagg::aggregate_majority_mc(panel, trials, seed)};
  });
}

int sepagg_transition_classes(const sepagg_transition* t) { return t ? t->t.classes() : 0; }

sepagg_status sepagg_transition_get(const sepagg_transition* t, int i, int j, double* out) {
  return guard([&] {
    require(t, "t");
    require(out, "out");
    const int m = t->t.classes();
    if (i < 0 || j < 0 || i >= m || j >= m) throw InvalidArgument("index out of range");
    *out = t->t(i, j);
  });
}

sepagg_status sepagg_transition_inverse(const sepagg_transition* t, double* out) {
  return guard([&] {
    require(t, "t");
    require(out, "out");
    const auto inv = sepagg::invert_transition(t->t);
    std::copy(inv.data.begin(), inv.data.end(), out);
  });
}

sepagg_status sepagg_transition_min_eigenvalue(const sepagg_transition* t, double* out) {
  return guard([&] {
    require(t, "t");
    require(out, "out");
    *out = sepagg::min_eigenvalue(t->t);
  });
}

void sepagg_transition_free(sepagg_transition* t) { delete t; }

sepagg_status sepagg_dataset_load_csv(const char* path, int m, sepagg_dataset** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    if (m < 0) throw InvalidArgument("m must be non-negative");
    *out = new sepagg_dataset{sepagg::load_csv(path, m)};
  });
}

sepagg_status sepagg_dataset_save_csv(const sepagg_dataset* ds, const char* path) {
  return guard([&] {
    require(ds, "ds");
    require(path, "path");
    sepagg::save_csv(ds->d, path);
  });
}

sepagg_status sepagg_dataset_gen_blobs(int m, size_t n, size_t dim, double separation, uint64_t seed,
                                       sepagg_dataset** out) {
  return guard([&] {
    require(out, "out");
    *out = new sepagg_dataset{sepagg::gen_blobs(m, n, dim, separation, seed)};
  });
}

sepagg_status sepagg_dataset_annotate(sepagg_dataset* ds, sepagg_noise_model model, double epsilon, size_t k,
                                      uint64_t seed) {
  return guard([&] {
    require(ds, "ds");
    if (k < 1) throw InvalidArgument("k must be at least 1");
    sepagg::NoiseSpec noise;
    noise.m = ds->d.m;
    switch (model) {
      case SEPAGG_NOISE_SYMMETRIC: noise.kind = sepagg::SymmetricNoise{epsilon}; break;
      case SEPAGG_NOISE_INSTANCE: noise.kind = sepagg::InstanceNoise{epsilon, sepagg::mix_seed(seed, 1)}; break;
      default: throw InvalidArgument("unknown noise model");
    }
    ds->d = sepagg::annotate(ds->d, noise, k, seed);
  });
}

sepagg_status sepagg_dataset_aggregate(sepagg_dataset* ds, sepagg_method method, char** diagnostics) {
  return guard([&] {
    require(ds, "ds");
    if (!ds->d.noisy_labels) throw sepagg::DomainError("dataset has no noisy label columns (ny0, ny1, ...)");
    sepagg::AggregationResult r;
    switch (method) {
      case SEPAGG_METHOD_MV: r = sepagg::majority_vote(*ds->d.noisy_labels); break;
      case SEPAGG_METHOD_EM: r = sepagg::dawid_skene_em(*ds->d.noisy_labels); break;
      default: throw InvalidArgument("unknown aggregation method");
    }
    std::string diag = diagnostics ? sepagg::to_json(r).dump(2) : std::string();
    sepagg::attach_aggregation(ds->d, r);
    if (diagnostics) *diagnostics = dup_string(diag);
  });
}

size_t sepagg_dataset_rows(const sepagg_dataset* ds) { return ds ? ds->d.size() : 0; }
size_t sepagg_dataset_dim(const sepagg_dataset* ds) { return ds ? ds->d.dim : 0; }
size_t sepagg_dataset_annotators(const sepagg_dataset* ds) {
  return ds && ds->d.noisy_labels ? ds->d.noisy_labels->annotators() : 0;
}
int sepagg_dataset_classes(const sepagg_dataset* ds) { return ds ? ds->d.m : 0; }
void sepagg_dataset_free(sepagg_dataset* ds) { delete ds; }

void sepagg_problem_init(sepagg_problem* p) {
  if (!p) return;
  *p = sepagg_problem{0.0, 0.0, 1, 1000.0, 0.05, 1.0, 0.5, 0.0, 1.0, 1.0};
}

sepagg_status sepagg_advise(const sepagg_problem* p, sepagg_loss loss, int* separate, char** report) {
  return guard([&] {
    require(p, "problem");
    require(separate, "separate");
    sepagg::ProblemSpec spec;
    spec.n = p->n;
    spec.k = p->k;
    spec.m = 2;
    spec.delta = p->delta;
    spec.vc_dim = p->vc_dim;
    if (!(p->p0 >= 0.0 && p->p0 <= 1.0)) throw sepagg::DomainError("p0 must lie in [0,1]");
    spec.priors = {p->p0, 1.0 - p->p0};
    spec.loss_lo = p->loss_lo;
    spec.loss_hi = p->loss_hi;
    spec.lipschitz = p->lipschitz;
    spec.t_base = sepagg::TransitionMatrix::binary(p->rho0, p->rho1);
    const auto decision = sepagg::decide(spec, loss_of(loss));
    *separate = decision.recommendation == sepagg::Treatment::separate ? 1 : 0;
    if (report) *report = dup_string(sepagg::to_json(decision).dump(2));
  });
}

sepagg_status sepagg_train(const sepagg_dataset* ds, const char* config, char** metrics) {
  return guard([&] {
    require(ds, "ds");
    require(metrics, "metrics");
    nlohmann::json j = nlohmann::json::object();
    if (config && *config) {
      try {
        j = nlohmann::json::parse(config);
      } catch (const nlohmann::json::parse_error& e) {
        throw sepagg::ParseError(std::string("train config: ") + e.what(), 0);
      }
    }
    static const char* known[] = {"loss",   "treatment", "seed",          "model", "hidden", "learning_rate",
                                  "momentum", "weight_decay", "epochs", "batch_size", "test_fraction",
                                  "epsilon", "rho0",      "rho1"};
    for (const auto& [key, _] : j.items())
      if (std::find(std::begin(known), std::end(known), key) == std::end(known))
        throw sepagg::ParseError("unknown train config field '" + key + "'", 0);

    sepagg::TrainConfig cfg;
    cfg.loss = sepagg::parse_loss_family(field<std::string>(j, "loss", "ce"));
    cfg.treatment = sepagg::parse_train_treatment(field<std::string>(j, "treatment", "sep"));
    cfg.seed = field<std::uint64_t>(j, "seed", 0);
    const auto model = field<std::string>(j, "model", "linear");
    if (model == "linear") cfg.model = sepagg::ModelKind::linear_softmax;
    else if (model == "mlp") cfg.model = sepagg::ModelKind::one_hidden_relu;
    else throw sepagg::DomainError("model must be linear or mlp, got '" + model + "'");
    cfg.hidden = field<std::size_t>(j, "hidden", cfg.hidden);
    cfg.learning_rate = field<double>(j, "learning_rate", cfg.learning_rate);
    cfg.momentum = field<double>(j, "momentum", cfg.momentum);
    cfg.weight_decay = field<double>(j, "weight_decay", cfg.weight_decay);
    cfg.epochs = field<int>(j, "epochs", cfg.epochs);
    cfg.batch_size = field<std::size_t>(j, "batch_size", cfg.batch_size);
    const double test_fraction = field<double>(j, "test_fraction", 0.5);

    const sepagg::Dataset& data = ds->d;
    if (!data.noisy_labels) throw sepagg::DomainError("dataset has no noisy label columns (ny0, ny1, ...)");
    if (!data.clean_labels) throw sepagg::DomainError("dataset has no clean label column y for testing");
    if (cfg.loss == sepagg::LossFamily::backward) {
      sepagg::TransitionMatrix base = sepagg::TransitionMatrix::identity(data.m);
      if (j.contains("epsilon")) {
        base = sepagg::make_symmetric(field<double>(j, "epsilon", 0.0), data.m);
      } else if (j.contains("rho0") || j.contains("rho1")) {
        if (data.m != 2) throw sepagg::DomainError("rho0/rho1 describe binary noise; use epsilon for M > 2");
        base = sepagg::TransitionMatrix::binary(field<double>(j, "rho0", 0.0), field<double>(j, "rho1", 0.0));
      } else {
        throw sepagg::DomainError("backward loss needs epsilon or rho0/rho1");
      }
      cfg.t_for_correction = sepagg::correction_matrix(base, static_cast<int>(data.noisy_labels->annotators()),
                                                       cfg.treatment, 200000, sepagg::mix_seed(cfg.seed, 5));
    }
    auto [train_part, test_part] = sepagg::split(data, {test_fraction, sepagg::mix_seed(cfg.seed, 1)});
    const auto treated = sepagg::apply_treatment(train_part, cfg.treatment);
    const auto m = sepagg::train(treated, test_part, cfg);
    *metrics = dup_string(sepagg::to_json(m).dump(2));
  });
}

sepagg_status sepagg_figure_csv(int which, int exact_lhs, char** csv) {
  return guard([&] {
    require(csv, "csv");
    std::ostringstream out;
    switch (which) {
      case 1: sepagg::write_figure1_csv(sepagg::default_figure1(), out); break;
      case 2: sepagg::write_figure2_csv(sepagg::default_figure2(), out); break;
      case 3:
        sepagg::write_figure3_csv(
            sepagg::default_figure3(exact_lhs ? sepagg::LhsForm::exact : sepagg::LhsForm::order_proxy), out);
        break;
      default: throw InvalidArgument("figure must be 1, 2 or 3");
    }
    *csv = dup_string(out.str());
  });
}

sepagg_status sepagg_experiment_run(const char* config_path, const char* output_dir, size_t* failed) {
  return guard([&] {
    require(config_path, "config_path");
    auto cfg = sepagg::ExperimentConfig::load(config_path);
    if (output_dir) cfg.output_dir = output_dir;
    if (cfg.output_dir.empty()) throw sepagg::DomainError("no output directory given");
    const auto result = sepagg::run_experiment(cfg);
    sepagg::write_experiment_outputs(result, cfg.output_dir);
    if (failed) *failed = result.failures;
  });
}

}  // extern "C"
