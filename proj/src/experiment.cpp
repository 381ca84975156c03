#include "sepagg/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

#include "sepagg/dataset.hpp"
#include "sepagg/error.hpp"
#include "sepagg/report.hpp"
#include "sepagg/rng.hpp"

namespace sepagg {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + " must be an object", 0);
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ParseError("unknown field '" + key + "' in " + where, 0);
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(where + "." + key + ": " + e.what(), 0);
  }
}

template <class T>
void maybe(const json& j, const char* key, T& out, const std::string& where) {
  if (j.contains(key)) out = get<T>(j, key, where);
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  reject_unknown(j,
                 {"dataset", "noise", "k_values", "epsilon_values", "losses", "treatments", "seeds", "train", "em",
                  "test_fraction", "output_dir", "threads"},
                 "config");
  ExperimentConfig c;
  if (j.contains("dataset")) {
    const json& d = j["dataset"];
    const auto type = d.is_object() && d.contains("type") ? get<std::string>(d, "type", "dataset") : std::string("blobs");
    if (type == "blobs") {
      reject_unknown(d, {"type", "m", "n", "dim", "separation"}, "dataset");
      BlobsSource b;
      maybe(d, "m", b.m, "dataset");
      maybe(d, "n", b.n, "dataset");
      maybe(d, "dim", b.dim, "dataset");
      maybe(d, "separation", b.separation, "dataset");
      c.dataset = b;
    } else if (type == "csv") {
      reject_unknown(d, {"type", "path"}, "dataset");
      c.dataset = CsvSource{get<std::string>(d, "path", "dataset")};
    } else {
      throw ParseError("dataset.type must be blobs or csv, got '" + type + "'", 0);
    }
  }
  if (j.contains("noise")) {
    const json& n = j["noise"];
    reject_unknown(n, {"model", "spread"}, "noise");
    const auto model = n.contains("model") ? get<std::string>(n, "model", "noise") : std::string("symmetric");
    if (model == "symmetric") c.noise = NoiseModel::symmetric;
    else if (model == "instance") c.noise = NoiseModel::instance;
    else throw ParseError("noise.model must be symmetric or instance, got '" + model + "'", 0);
    maybe(n, "spread", c.instance_spread, "noise");
  }
  maybe(j, "k_values", c.k_values, "config");
  maybe(j, "epsilon_values", c.epsilon_values, "config");
  maybe(j, "seeds", c.seeds, "config");
  maybe(j, "test_fraction", c.test_fraction, "config");
  maybe(j, "threads", c.threads, "config");
  if (j.contains("output_dir")) c.output_dir = get<std::string>(j, "output_dir", "config");
  try {
    if (j.contains("losses")) {
      c.losses.clear();
      for (const auto& s : get<std::vector<std::string>>(j, "losses", "config")) c.losses.push_back(parse_loss_family(s));
    }
    if (j.contains("treatments")) {
      c.treatments.clear();
      for (const auto& s : get<std::vector<std::string>>(j, "treatments", "config"))
        c.treatments.push_back(parse_train_treatment(s));
    }
  } catch (const DomainError& e) {
    throw ParseError(e.what(), 0);
  }
  if (j.contains("train")) {
    const json& t = j["train"];
    reject_unknown(t, {"model", "hidden", "learning_rate", "momentum", "weight_decay", "epochs", "batch_size"}, "train");
    if (t.contains("model")) {
      const auto m = get<std::string>(t, "model", "train");
      if (m == "linear") c.train.model = ModelKind::linear_softmax;
      else if (m == "mlp") c.train.model = ModelKind::one_hidden_relu;
      else throw ParseError("train.model must be linear or mlp, got '" + m + "'", 0);
    }
    maybe(t, "hidden", c.train.hidden, "train");
    maybe(t, "learning_rate", c.train.learning_rate, "train");
    maybe(t, "momentum", c.train.momentum, "train");
    maybe(t, "weight_decay", c.train.weight_decay, "train");
    maybe(t, "epochs", c.train.epochs, "train");
    maybe(t, "batch_size", c.train.batch_size, "train");
  }
  if (j.contains("em")) {
    const json& e = j["em"];
    reject_unknown(e, {"max_iter", "tol", "smoothing"}, "em");
    maybe(e, "max_iter", c.em.max_iter, "em");
    maybe(e, "tol", c.em.tol, "em");
    maybe(e, "smoothing", c.em.smoothing, "em");
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
  return from_json(j);
}

void ExperimentConfig::validate() const {
  if (k_values.empty()) throw DomainError("k_values is empty");
  if (epsilon_values.empty()) throw DomainError("epsilon_values is empty");
  if (losses.empty()) throw DomainError("losses is empty");
  if (treatments.empty()) throw DomainError("treatments is empty");
  if (seeds.empty()) throw DomainError("seeds is empty");
  auto unique = [](auto values, const char* name) {
    std::sort(values.begin(), values.end());
    if (std::adjacent_find(values.begin(), values.end()) != values.end())
      throw DomainError(std::string(name) + " has duplicate entries");
  };
  unique(k_values, "k_values");
  unique(epsilon_values, "epsilon_values");
  unique(losses, "losses");
  unique(treatments, "treatments");
  unique(seeds, "seeds");
  for (int k : k_values)
    if (k < 1) throw DomainError("every K must be at least 1");
  for (double e : epsilon_values)
    if (!(e >= 0.0 && e < 1.0)) throw DomainError("every epsilon must lie in [0,1)");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw DomainError("test_fraction must lie in (0,1)");
  if (threads < 1) throw DomainError("threads must be at least 1");
  if (const auto* b = std::get_if<BlobsSource>(&dataset)) {
    if (b->m < 2) throw DomainError("dataset.m must be at least 2");
    if (b->n < 2) throw DomainError("dataset.n must be at least 2");
    if (b->dim < 1) throw DomainError("dataset.dim must be at least 1");
  }
  TrainConfig probe = train;
  probe.loss = LossFamily::ce;
  probe.validate();
}

namespace {

struct Cell {
  std::size_t k_index, eps_index, seed_index;
};

// Every run of a cell shares one dataset, split, annotation and training seed.
void run_cell(const ExperimentConfig& cfg, const Cell& cell, const Dataset* csv_data,
              std::vector<SweepRow>& out) {
  const int k = cfg.k_values[cell.k_index];
  const double eps = cfg.epsilon_values[cell.eps_index];
  const std::uint64_t seed = cfg.seeds[cell.seed_index];

  std::vector<SweepRow> rows;
  for (LossFamily loss : cfg.losses)
    for (TrainTreatment t : cfg.treatments) {
      SweepRow row;
      row.k = k;
      row.epsilon = eps;
      row.loss = loss;
      row.treatment = t;
      row.seed = seed;
      rows.push_back(std::move(row));
    }

  try {
    Dataset data = csv_data ? *csv_data : [&] {
      const auto& b = std::get<BlobsSource>(cfg.dataset);
      return gen_blobs(b.m, b.n, b.dim, b.separation, mix_seed(seed, 0));
    }();
    auto [train_data, test_data] = split(data, {cfg.test_fraction, mix_seed(seed, 1)});
    NoiseSpec noise;
    noise.m = data.m;
    if (cfg.noise == NoiseModel::symmetric)
      noise.kind = SymmetricNoise{eps};
    else
      noise.kind = InstanceNoise{eps, mix_seed(seed, 4), 0.0, 0.49, cfg.instance_spread};
    const std::uint64_t label_seed = mix_seed(mix_seed(seed, 2), static_cast<std::uint64_t>(k) * 1000003u + cell.eps_index);
    train_data = annotate(train_data, noise, static_cast<std::size_t>(k), label_seed);

    std::map<TrainTreatment, Dataset> treated;
    std::size_t r = 0;
    for (LossFamily loss : cfg.losses) {
      for (TrainTreatment t : cfg.treatments) {
        SweepRow& row = rows[r++];
        const auto start = std::chrono::steady_clock::now();
        try {
          auto it = treated.find(t);
          if (it == treated.end()) it = treated.emplace(t, apply_treatment(train_data, t, cfg.em)).first;
          TrainConfig tc = cfg.train;
          tc.loss = loss;
          tc.treatment = t;
          tc.seed = mix_seed(seed, 3);
          if (loss == LossFamily::backward)
            tc.t_for_correction = correction_matrix(make_symmetric(eps, data.m), k, t, 200000, mix_seed(seed, 5));
          const Metrics m = train(it->second, test_data, tc);
          row.best_test_accuracy = m.best_test_accuracy;
          row.final_test_accuracy = m.final_test_accuracy;
        } catch (const std::exception& e) {
          row.error = e.what();
        }
        row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      }
    }
  } catch (const std::exception& e) {
    for (auto& row : rows) row.error = e.what();
  }
  out = std::move(rows);
}

}  // namespace

SweepResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::optional<Dataset> csv_data;
  if (const auto* c = std::get_if<CsvSource>(&cfg.dataset)) {
    csv_data = load_csv(c->path);
    if (!csv_data->clean_labels) throw DomainError(c->path.string() + " has no clean label column y");
    if (csv_data->dim == 0) throw DomainError(c->path.string() + " has no feature columns");
    csv_data->noisy_labels.reset();
    csv_data->extra.clear();
  }

  std::vector<Cell> cells;
  for (std::size_t ki = 0; ki < cfg.k_values.size(); ++ki)
    for (std::size_t ei = 0; ei < cfg.epsilon_values.size(); ++ei)
      for (std::size_t si = 0; si < cfg.seeds.size(); ++si) cells.push_back({ki, ei, si});

  std::vector<std::vector<SweepRow>> results(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < cells.size();)
      run_cell(cfg, cells[i], csv_data ? &*csv_data : nullptr, results[i]);
  };
  const std::size_t n_threads = std::min(cfg.threads, cells.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Cells run K/epsilon/seed-major; reorder rows to K, epsilon, loss, treatment, seed.
  SweepResult out;
  const std::size_t n_seeds = cfg.seeds.size();
  for (std::size_t ki = 0; ki < cfg.k_values.size(); ++ki)
    for (std::size_t ei = 0; ei < cfg.epsilon_values.size(); ++ei)
      for (std::size_t r = 0; r < cfg.losses.size() * cfg.treatments.size(); ++r)
        for (std::size_t si = 0; si < n_seeds; ++si) {
          const std::size_t cell = (ki * cfg.epsilon_values.size() + ei) * n_seeds + si;
          out.rows.push_back(results[cell][r]);
        }
  for (const auto& row : out.rows)
    if (!row.error.empty()) ++out.failures;
  out.summary = summarize(out.rows);
  return out;
}

std::vector<SummaryRow> summarize(const std::vector<SweepRow>& rows) {
  struct Acc {
    double sum = 0.0;
    std::size_t n = 0;
  };
  std::vector<SummaryRow> out;
  std::map<std::tuple<int, double, LossFamily>, std::size_t> index;
  std::map<std::pair<std::size_t, TrainTreatment>, Acc> acc;
  for (const auto& r : rows) {
    const auto key = std::make_tuple(r.k, r.epsilon, r.loss);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      SummaryRow row;
      row.k = r.k;
      row.epsilon = r.epsilon;
      row.loss = r.loss;
      out.push_back(row);
    }
    if (!r.error.empty()) continue;
    Acc& a = acc[{it->second, r.treatment}];
    a.sum += r.best_test_accuracy;
    ++a.n;
  }
  for (const auto& [key, a] : acc) {
    SummaryRow& s = out[key.first];
    const double mean = a.sum / static_cast<double>(a.n);
    switch (key.second) {
      case TrainTreatment::separate: s.separate = mean; break;
      case TrainTreatment::majority_vote: s.majority_vote = mean; break;
      case TrainTreatment::em: s.em = mean; break;
    }
  }
  for (auto& s : out) {
    if (s.majority_vote && s.em) s.aggregate_best = std::max(*s.majority_vote, *s.em);
    else if (s.majority_vote) s.aggregate_best = s.majority_vote;
    else if (s.em) s.aggregate_best = s.em;
  }
  return out;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c == '\n' || c == '\r' ? ' ' : c;
  }
  return q + '"';
}

std::string opt(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

}  // namespace

void write_sweep_csv(const SweepResult& r, std::ostream& out) {
  out << "k,epsilon,loss,treatment,seed,best_test_accuracy,final_test_accuracy,error\n";
  for (const auto& row : r.rows) {
    out << row.k << ',' << format_number(row.epsilon) << ',' << short_name(row.loss) << ',' << to_string(row.treatment)
        << ',' << row.seed << ',';
    if (row.error.empty())
      out << format_number(row.best_test_accuracy) << ',' << format_number(row.final_test_accuracy) << ',';
    else
      out << ",," << csv_field(row.error);
    out << '\n';
  }
}

void write_summary_csv(const SweepResult& r, std::ostream& out) {
  out << "k,epsilon,loss,separate,majority_vote,em,aggregate_best,winner\n";
  for (const auto& s : r.summary) {
    std::string winner;
    if (s.separate && s.aggregate_best) winner = *s.separate > *s.aggregate_best ? "separate" : "aggregate";
    out << s.k << ',' << format_number(s.epsilon) << ',' << short_name(s.loss) << ',' << opt(s.separate) << ','
        << opt(s.majority_vote) << ',' << opt(s.em) << ',' << opt(s.aggregate_best) << ',' << winner << '\n';
  }
}

void write_timing_csv(const SweepResult& r, std::ostream& out) {
  out << "k,epsilon,loss,treatment,seed,wall_seconds\n";
  for (const auto& row : r.rows)
    out << row.k << ',' << format_number(row.epsilon) << ',' << short_name(row.loss) << ',' << to_string(row.treatment)
        << ',' << row.seed << ',' << format_number(row.wall_seconds) << '\n';
}

void write_experiment_outputs(const SweepResult& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  auto write = [&](const char* name, void (*fn)(const SweepResult&, std::ostream&)) {
    const auto path = dir / name;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    fn(r, out);
    if (!out) throw IoError("write failed for " + path.string());
  };
  write("sweep.csv", write_sweep_csv);
  write("summary.csv", write_summary_csv);
  write("timing.csv", write_timing_csv);
}

}  // namespace sepagg
