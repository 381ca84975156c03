// Command-line front end. Talks to the library only through sepagg.h.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "sepagg/sepagg.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitAggregate = 10;

// Owns a string handed out by the library.
struct LibString {
  char* p = nullptr;
  ~LibString() { sepagg_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct DatasetHandle {
  sepagg_dataset* p = nullptr;
  ~DatasetHandle() { sepagg_dataset_free(p); }
};

int fail(const std::string& what, int code = kExitFailure) {
  std::cerr << "sepagg: " << what << ": " << sepagg_last_error() << "\n";
  return code;
}

bool write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return static_cast<bool>(std::cout);
  }
  std::ofstream out(path);
  out << text;
  return static_cast<bool>(out);
}

CLI::Validator open_unit_interval() {
  return CLI::Validator(
      [](std::string& s) -> std::string {
        double v = 0;
        try {
          v = std::stod(s);
        } catch (...) {
          return "'" + s + "' is not a number";
        }
        return v > 0.0 && v < 1.0 ? "" : "value " + s + " must lie strictly between 0 and 1";
      },
      "(0,1)");
}

CLI::Validator rate() { return CLI::Range(0.0, 1.0).description("[0,1]"); }

CLI::Validator positive() {
  return CLI::Validator(
      [](std::string& s) -> std::string {
        double v = 0;
        try {
          v = std::stod(s);
        } catch (...) {
          return "'" + s + "' is not a number";
        }
        return v > 0.0 ? "" : "value " + s + " must be positive";
      },
      "POSITIVE");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Separate or aggregate? Noisy-label advisor, aggregators and training sweeps."};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sepagg_version()));

  // advise
  auto* advise = app.add_subcommand("advise", "Recommend separation or aggregation for K binary annotators");
  sepagg_problem prob;
  sepagg_problem_init(&prob);
  std::string advise_loss = "ce";
  double loss_range = 1.0;
  advise->add_option("--rho0", prob.rho0, "P(noisy=1 | clean=0)")->required()->check(rate());
  advise->add_option("--rho1", prob.rho1, "P(noisy=0 | clean=1)")->required()->check(rate());
  advise->add_option("--k", prob.k, "annotators per example")->required()->check(CLI::PositiveNumber);
  advise->add_option("--n", prob.n, "training examples")->required()->check(CLI::Range(2.0, std::numeric_limits<double>::max()));
  advise->add_option("--delta", prob.delta, "confidence parameter")->required()->check(open_unit_interval());
  advise->add_option("--vc-dim", prob.vc_dim, "VC dimension of the hypothesis class")->required()->check(positive());
  advise->add_option("--loss", advise_loss, "loss family")->required()->check(CLI::IsMember({"ce", "bw", "pl"}));
  advise->add_option("--p0", prob.p0, "prior of class 0")->check(rate());
  advise->add_option("--loss-range", loss_range, "upper minus lower bound of the loss")->check(positive());
  advise->add_option("--lipschitz", prob.lipschitz, "Lipschitz constant of the loss")->check(positive());

  // aggregate
  auto* aggregate = app.add_subcommand("aggregate", "Collapse ny* columns into y_hat plus posteriors");
  std::string agg_in, agg_out, agg_method = "mv", agg_report;
  int agg_classes = 0;
  aggregate->add_option("--input", agg_in, "CSV with ny0..ny{K-1}")->required();
  aggregate->add_option("--method", agg_method, "mv or em")->check(CLI::IsMember({"mv", "em"}));
  aggregate->add_option("--out", agg_out, "output CSV")->required();
  aggregate->add_option("--classes", agg_classes, "class count (default: inferred)")->check(CLI::NonNegativeNumber);
  aggregate->add_option("--report", agg_report, "write aggregation diagnostics as JSON here");

  // simulate-noise
  auto* simulate = app.add_subcommand("simulate-noise", "Replace ny* with K simulated noisy label columns");
  std::string sim_in, sim_out, sim_model = "symmetric";
  double sim_eps = 0.0;
  std::size_t sim_k = 1;
  std::uint64_t sim_seed = 0;
  int sim_classes = 0;
  simulate->add_option("--input", sim_in, "CSV with features and clean y")->required();
  simulate->add_option("--epsilon", sim_eps, "noise rate")->required()->check(CLI::Range(0.0, 0.999999));
  simulate->add_option("--k", sim_k, "annotators")->required()->check(CLI::PositiveNumber);
  simulate->add_option("--model", sim_model, "symmetric or instance")->check(CLI::IsMember({"symmetric", "instance"}));
  simulate->add_option("--seed", sim_seed, "random seed");
  simulate->add_option("--classes", sim_classes, "class count (default: inferred)")->check(CLI::NonNegativeNumber);
  simulate->add_option("--out", sim_out, "output CSV (default: stdout)");

  // gen-blobs
  auto* blobs = app.add_subcommand("gen-blobs", "Write a Gaussian-blob dataset");
  int blob_m = 2;
  std::size_t blob_n = 2000, blob_dim = 10;
  double blob_sep = 2.0;
  std::uint64_t blob_seed = 0;
  std::string blob_out;
  blobs->add_option("--m", blob_m, "classes")->check(CLI::Range(2, 1000));
  blobs->add_option("--n", blob_n, "examples");
  blobs->add_option("--dim", blob_dim, "feature dimension")->check(CLI::PositiveNumber);
  blobs->add_option("--separation", blob_sep, "distance between class means")->check(CLI::NonNegativeNumber);
  blobs->add_option("--seed", blob_seed, "random seed");
  blobs->add_option("--out", blob_out, "output CSV (default: stdout)");

  // train
  auto* trainc = app.add_subcommand("train", "Train one model and print Metrics JSON");
  std::string tr_in, tr_out, tr_treatment = "sep", tr_loss = "ce", tr_model = "linear";
  std::uint64_t tr_seed = 0;
  std::optional<double> tr_rho0, tr_rho1, tr_eps, tr_lr, tr_mom, tr_wd, tr_frac;
  std::optional<int> tr_epochs;
  std::optional<std::size_t> tr_batch, tr_hidden;
  trainc->add_option("--input", tr_in, "CSV with features, y and ny* columns")->required();
  trainc->add_option("--treatment", tr_treatment, "sep, mv or em")->check(CLI::IsMember({"sep", "mv", "em"}));
  trainc->add_option("--loss", tr_loss, "ce, bw or pl")->check(CLI::IsMember({"ce", "bw", "pl"}));
  trainc->add_option("--seed", tr_seed, "random seed");
  trainc->add_option("--rho0", tr_rho0, "per-annotator P(noisy=1 | clean=0), for bw")->check(rate());
  trainc->add_option("--rho1", tr_rho1, "per-annotator P(noisy=0 | clean=1), for bw")->check(rate());
  trainc->add_option("--epsilon", tr_eps, "per-annotator symmetric noise rate, for bw")->check(rate());
  trainc->add_option("--model", tr_model, "linear or mlp")->check(CLI::IsMember({"linear", "mlp"}));
  trainc->add_option("--hidden", tr_hidden, "hidden width for mlp")->check(CLI::PositiveNumber);
  trainc->add_option("--epochs", tr_epochs, "training epochs")->check(CLI::PositiveNumber);
  trainc->add_option("--lr", tr_lr, "learning rate")->check(positive());
  trainc->add_option("--momentum", tr_mom, "SGD momentum")->check(CLI::Range(0.0, 0.999999));
  trainc->add_option("--weight-decay", tr_wd, "L2 weight decay")->check(CLI::NonNegativeNumber);
  trainc->add_option("--batch-size", tr_batch, "minibatch size")->check(CLI::PositiveNumber);
  trainc->add_option("--test-fraction", tr_frac, "held-out fraction")->check(open_unit_interval());
  trainc->add_option("--out", tr_out, "also write the Metrics JSON here");

  // figure
  auto* figure = app.add_subcommand("figure", "Write figure data as CSV");
  int fig_which = 1;
  bool fig_exact = false;
  std::string fig_out;
  figure->add_option("--which", fig_which, "1, 2 or 3")->required()->check(CLI::IsMember({1, 2, 3}));
  figure->add_option("--out", fig_out, "output CSV (default: stdout)");
  figure->add_flag("--exact", fig_exact, "figure 3: use the clipped richness factor instead of its order");

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Run a training sweep from a JSON config");
  std::string exp_config, exp_out;
  experiment->add_option("config", exp_config, "experiment config JSON")->required();
  experiment->add_option("--out-dir", exp_out, "override the config's output_dir");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (advise->parsed()) {
    prob.loss_lo = 0.0;
    prob.loss_hi = loss_range;
    const sepagg_loss loss = advise_loss == "ce" ? SEPAGG_LOSS_CE : advise_loss == "bw" ? SEPAGG_LOSS_BACKWARD : SEPAGG_LOSS_PEER;
    int separate = 0;
    LibString report;
    if (sepagg_advise(&prob, loss, &separate, &report.p) != SEPAGG_OK) return fail("advise", kExitUsage);
    std::cout << report.str() << "\n";
    return separate ? kExitOk : kExitAggregate;
  }

  if (aggregate->parsed()) {
    DatasetHandle ds;
    if (sepagg_dataset_load_csv(agg_in.c_str(), agg_classes, &ds.p) != SEPAGG_OK) return fail(agg_in);
    LibString diag;
    const auto method = agg_method == "em" ? SEPAGG_METHOD_EM : SEPAGG_METHOD_MV;
    if (sepagg_dataset_aggregate(ds.p, method, agg_report.empty() ? nullptr : &diag.p) != SEPAGG_OK)
      return fail("aggregate");
    if (sepagg_dataset_save_csv(ds.p, agg_out.c_str()) != SEPAGG_OK) return fail(agg_out);
    if (!agg_report.empty() && !write_text(agg_report, diag.str() + "\n")) {
      std::cerr << "sepagg: cannot write " << agg_report << "\n";
      return kExitFailure;
    }
    return kExitOk;
  }

  if (simulate->parsed()) {
    DatasetHandle ds;
    if (sepagg_dataset_load_csv(sim_in.c_str(), sim_classes, &ds.p) != SEPAGG_OK) return fail(sim_in);
    const auto model = sim_model == "instance" ? SEPAGG_NOISE_INSTANCE : SEPAGG_NOISE_SYMMETRIC;
    if (sepagg_dataset_annotate(ds.p, model, sim_eps, sim_k, sim_seed) != SEPAGG_OK) return fail("simulate-noise");
    const std::string out = sim_out.empty() || sim_out == "-" ? "/dev/stdout" : sim_out;
    if (sepagg_dataset_save_csv(ds.p, out.c_str()) != SEPAGG_OK) return fail(out);
    return kExitOk;
  }

  if (blobs->parsed()) {
    DatasetHandle ds;
    if (sepagg_dataset_gen_blobs(blob_m, blob_n, blob_dim, blob_sep, blob_seed, &ds.p) != SEPAGG_OK)
      return fail("gen-blobs", kExitUsage);
    const std::string out = blob_out.empty() || blob_out == "-" ? "/dev/stdout" : blob_out;
    if (sepagg_dataset_save_csv(ds.p, out.c_str()) != SEPAGG_OK) return fail(out);
    return kExitOk;
  }

  if (trainc->parsed()) {
    if (tr_loss == "bw" && !tr_eps && !tr_rho0 && !tr_rho1) {
      std::cerr << "sepagg: --loss bw needs --epsilon or --rho0/--rho1\n";
      return kExitUsage;
    }
    if (tr_eps && (tr_rho0 || tr_rho1)) {
      std::cerr << "sepagg: --epsilon and --rho0/--rho1 are mutually exclusive\n";
      return kExitUsage;
    }
    nlohmann::json cfg{{"loss", tr_loss}, {"treatment", tr_treatment}, {"seed", tr_seed}, {"model", tr_model}};
    if (tr_rho0) cfg["rho0"] = *tr_rho0;
    if (tr_rho1) cfg["rho1"] = *tr_rho1;
    if (tr_eps) cfg["epsilon"] = *tr_eps;
    if (tr_hidden) cfg["hidden"] = *tr_hidden;
    if (tr_epochs) cfg["epochs"] = *tr_epochs;
    if (tr_lr) cfg["learning_rate"] = *tr_lr;
    if (tr_mom) cfg["momentum"] = *tr_mom;
    if (tr_wd) cfg["weight_decay"] = *tr_wd;
    if (tr_batch) cfg["batch_size"] = *tr_batch;
    if (tr_frac) cfg["test_fraction"] = *tr_frac;
    DatasetHandle ds;
    if (sepagg_dataset_load_csv(tr_in.c_str(), 0, &ds.p) != SEPAGG_OK) return fail(tr_in);
    LibString metrics;
    if (sepagg_train(ds.p, cfg.dump().c_str(), &metrics.p) != SEPAGG_OK) return fail("train");
    std::cout << metrics.str() << "\n";
    if (!tr_out.empty() && !write_text(tr_out, metrics.str() + "\n")) {
      std::cerr << "sepagg: cannot write " << tr_out << "\n";
      return kExitFailure;
    }
    return kExitOk;
  }

  if (figure->parsed()) {
    LibString csv;
    if (sepagg_figure_csv(fig_which, fig_exact ? 1 : 0, &csv.p) != SEPAGG_OK) return fail("figure");
    if (!write_text(fig_out, csv.str())) {
      std::cerr << "sepagg: cannot write " << fig_out << "\n";
      return kExitFailure;
    }
    return kExitOk;
  }

  if (experiment->parsed()) {
    std::size_t failed = 0;
    if (sepagg_experiment_run(exp_config.c_str(), exp_out.empty() ? nullptr : exp_out.c_str(), &failed) != SEPAGG_OK)
      return fail("experiment");
    if (failed) {
      std::cerr << "sepagg: " << failed << " run(s) failed; see the error column of sweep.csv\n";
      return kExitFailure;
    }
    return kExitOk;
  }
  return kExitUsage;
}
