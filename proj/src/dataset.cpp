#include "sepagg/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "sepagg/error.hpp"
#include "sepagg/rng.hpp"

namespace sepagg {

std::size_t Dataset::size() const noexcept {
  if (dim) return features.size() / dim;
  if (clean_labels) return clean_labels->size();
  if (noisy_labels) return noisy_labels->rows();
  if (!extra.empty()) return extra.front().values.size();
  return 0;
}

std::vector<std::string> Dataset::column_names() const {
  std::vector<std::string> names;
  for (std::size_t c = 0; c < dim; ++c) names.push_back("f" + std::to_string(c));
  if (clean_labels) names.push_back("y");
  if (noisy_labels)
    for (std::size_t j = 0; j < noisy_labels->annotators(); ++j) names.push_back("ny" + std::to_string(j));
  for (const auto& e : extra) names.push_back(e.name);
  return names;
}

void Dataset::validate() const {
  const std::size_t n = size();
  if (dim && features.size() != n * dim) throw DomainError("feature block is not N x D");
  if (m < 2) throw DomainError("dataset needs at least 2 classes");
  if (clean_labels) {
    if (clean_labels->size() != n) throw DomainError("clean label count does not match the row count");
    for (int y : *clean_labels)
      if (y < 0 || y >= m) throw DomainError("clean label " + std::to_string(y) + " out of range");
  }
  if (noisy_labels) {
    if (noisy_labels->rows() != n) throw DomainError("noisy label rows do not match the row count");
    if (noisy_labels->classes() != m) throw DomainError("noisy labels disagree on the class count");
  }
  for (const auto& e : extra)
    if (e.values.size() != n) throw DomainError("column " + e.name + " has the wrong length");
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.dim = dim;
  out.m = m;
  out.features.reserve(rows.size() * dim);
  for (std::size_t r : rows) out.features.insert(out.features.end(), features.begin() + r * dim, features.begin() + (r + 1) * dim);
  if (clean_labels) {
    out.clean_labels.emplace();
    for (std::size_t r : rows) out.clean_labels->push_back((*clean_labels)[r]);
  }
  if (noisy_labels) out.noisy_labels = noisy_labels->select_rows(rows);
  for (const auto& e : extra) {
    ExtraColumn c{e.name, {}};
    for (std::size_t r : rows) c.values.push_back(e.values[r]);
    out.extra.push_back(std::move(c));
  }
  return out;
}

void Dataset::set_extra(std::string name, std::vector<double> values) {
  for (auto& e : extra)
    if (e.name == name) {
      e.values = std::move(values);
      return;
    }
  extra.push_back({std::move(name), std::move(values)});
}

Dataset gen_blobs(int m, std::size_t n, std::size_t dim, double separation, std::uint64_t seed) {
  if (m < 2) throw DomainError("blobs need at least 2 classes");
  if (dim == 0) throw DomainError("blobs need a positive dimension");
  if (!(separation >= 0.0)) throw DomainError("blob separation must be non-negative");
  Dataset d;
  d.dim = dim;
  d.m = m;
  d.features.resize(n * dim);
  d.clean_labels.emplace(n);
  // Simplex vertices when there is room, otherwise a line along f0.
  const bool simplex = dim >= static_cast<std::size_t>(m);
  const double offset = simplex ? separation / std::sqrt(2.0) : separation;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % static_cast<std::size_t>(m));
    (*d.clean_labels)[i] = c;
    double* x = d.features.data() + i * dim;
    for (std::size_t j = 0; j < dim; ++j) x[j] = rng.normal();
    if (simplex) x[c] += offset;
    else x[0] += c * offset;
  }
  return d;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view field, const std::string& column, std::size_t line) {
  field = trim(field);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
    throw ParseError("column " + column + ": '" + std::string(field) + "' is not a number", line);
  return v;
}

int parse_label(std::string_view field, const std::string& column, std::size_t line) {
  const double v = parse_number(field, column, line);
  if (v < 0.0 || v != std::floor(v) || v > 1e9)
    throw ParseError("column " + column + ": label '" + std::string(trim(field)) + "' is not a non-negative integer", line);
  return static_cast<int>(v);
}

// Index suffix of names like f12 / ny3, or -1.
long indexed(const std::string& name, std::string_view prefix) {
  if (name.size() <= prefix.size() || name.compare(0, prefix.size(), prefix) != 0) return -1;
  long v = 0;
  for (std::size_t i = prefix.size(); i < name.size(); ++i) {
    if (name[i] < '0' || name[i] > '9') return -1;
    v = v * 10 + (name[i] - '0');
  }
  return v;
}

void append_number(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

}  // namespace

Dataset read_csv(std::istream& in, int m) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file, expected a header row", 1);
  std::vector<std::string> names;
  for (auto f : split_fields(line)) names.emplace_back(trim(f));

  enum class Role { feature, clean, noisy, extra };
  std::vector<std::pair<Role, long>> roles;
  std::map<long, std::size_t> feature_cols, noisy_cols;
  std::optional<std::size_t> clean_col;
  std::vector<std::size_t> extra_cols;
  for (std::size_t c = 0; c < names.size(); ++c) {
    const std::string& name = names[c];
    if (name.empty()) throw ParseError("empty column name at position " + std::to_string(c), 1);
    if (long i = indexed(name, "f"); i >= 0) {
      if (!feature_cols.emplace(i, c).second) throw ParseError("duplicate column " + name, 1);
    } else if (long j = indexed(name, "ny"); j >= 0) {
      if (!noisy_cols.emplace(j, c).second) throw ParseError("duplicate column " + name, 1);
    } else if (name == "y") {
      if (clean_col) throw ParseError("duplicate column y", 1);
      clean_col = c;
    } else {
      extra_cols.push_back(c);
    }
  }
  auto check_contiguous = [](const std::map<long, std::size_t>& cols, const char* prefix) {
    long expect = 0;
    for (const auto& [i, c] : cols) {
      if (i != expect) throw ParseError(std::string("columns ") + prefix + "* must be numbered from 0 without gaps", 1);
      ++expect;
    }
  };
  check_contiguous(feature_cols, "f");
  check_contiguous(noisy_cols, "ny");

  const std::size_t dim = feature_cols.size(), k = noisy_cols.size();
  std::vector<double> features;
  std::vector<int> clean, noisy;
  std::vector<std::vector<double>> extras(extra_cols.size());
  std::vector<std::size_t> label_lines;  // source line of each row, for range errors
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != names.size())
      throw ParseError("expected " + std::to_string(names.size()) + " fields, found " + std::to_string(fields.size()), line_no);
    for (const auto& [i, c] : feature_cols) features.push_back(parse_number(fields[c], names[c], line_no));
    if (clean_col) clean.push_back(parse_label(fields[*clean_col], "y", line_no));
    for (const auto& [j, c] : noisy_cols) noisy.push_back(parse_label(fields[c], names[c], line_no));
    for (std::size_t e = 0; e < extra_cols.size(); ++e)
      extras[e].push_back(parse_number(fields[extra_cols[e]], names[extra_cols[e]], line_no));
    label_lines.push_back(line_no);
  }

  int max_label = -1;
  for (int v : clean) max_label = std::max(max_label, v);
  for (int v : noisy) max_label = std::max(max_label, v);
  const int classes = m > 0 ? m : std::max(2, max_label + 1);
  if (m > 0) {
    const std::size_t width = (clean_col ? 1 : 0) + k;
    for (std::size_t r = 0; r < label_lines.size(); ++r) {
      bool bad = clean_col && clean[r] >= classes;
      for (std::size_t j = 0; j < k && !bad; ++j) bad = noisy[r * k + j] >= classes;
      if (bad && width)
        throw ParseError("label outside [0, " + std::to_string(classes) + ")", label_lines[r]);
    }
  }

  Dataset d;
  d.dim = dim;
  d.m = classes;
  d.features = std::move(features);
  if (clean_col) d.clean_labels = std::move(clean);
  if (k) d.noisy_labels = LabelMatrix(label_lines.size(), k, classes, std::move(noisy));
  for (std::size_t e = 0; e < extra_cols.size(); ++e) d.extra.push_back({names[extra_cols[e]], std::move(extras[e])});
  if (d.size() != label_lines.size() && (dim || clean_col || k || !extra_cols.empty()))
    throw ParseError("row count mismatch", 0);
  return d;
}

void write_csv(const Dataset& data, std::ostream& out) {
  data.validate();
  const auto names = data.column_names();
  std::string buf;
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (c) buf += ',';
    buf += names[c];
  }
  buf += '\n';
  const std::size_t n = data.size();
  for (std::size_t i = 0; i < n; ++i) {
    bool first = true;
    auto sep = [&] {
      if (!first) buf += ',';
      first = false;
    };
    for (std::size_t c = 0; c < data.dim; ++c) {
      sep();
      append_number(buf, data.features[i * data.dim + c]);
    }
    if (data.clean_labels) {
      sep();
      buf += std::to_string((*data.clean_labels)[i]);
    }
    if (data.noisy_labels)
      for (int v : data.noisy_labels->row(i)) {
        sep();
        buf += std::to_string(v);
      }
    for (const auto& e : data.extra) {
      sep();
      append_number(buf, e.values[i]);
    }
    buf += '\n';
    if (buf.size() > (1u << 20)) {
      out << buf;
      buf.clear();
    }
  }
  out << buf;
}

Dataset load_csv(const std::filesystem::path& path, int m) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_csv(in, m);
}

void save_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_csv(data, out);
  if (!out) throw IoError("write failed for " + path.string());
}

std::pair<Dataset, Dataset> split(const Dataset& data, const SplitSpec& spec) {
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0))
    throw DomainError("test fraction must lie in (0,1)");
  data.validate();
  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(spec.seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);

  std::vector<std::size_t> train_rows, test_rows;
  if (data.clean_labels) {
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(data.m));
    for (std::size_t r : order) by_class[(*data.clean_labels)[r]].push_back(r);
    for (const auto& rows : by_class) {
      const auto n_test = static_cast<std::size_t>(std::llround(spec.test_fraction * static_cast<double>(rows.size())));
      test_rows.insert(test_rows.end(), rows.begin(), rows.begin() + n_test);
      train_rows.insert(train_rows.end(), rows.begin() + n_test, rows.end());
    }
    // Restore the shuffled interleaving across classes.
    std::vector<std::size_t> rank(n);
    for (std::size_t i = 0; i < n; ++i) rank[order[i]] = i;
    auto by_rank = [&](std::size_t a, std::size_t b) { return rank[a] < rank[b]; };
    std::sort(train_rows.begin(), train_rows.end(), by_rank);
    std::sort(test_rows.begin(), test_rows.end(), by_rank);
  } else {
    const auto n_test = static_cast<std::size_t>(std::llround(spec.test_fraction * static_cast<double>(n)));
    test_rows.assign(order.begin(), order.begin() + n_test);
    train_rows.assign(order.begin() + n_test, order.end());
  }
  return {data.subset(train_rows), data.subset(test_rows)};
}

Dataset annotate(const Dataset& data, const NoiseSpec& noise, std::size_t k, std::uint64_t seed) {
  if (!data.clean_labels) throw DomainError("annotation needs clean labels");
  if (noise.m != data.m) throw DomainError("noise spec class count does not match the dataset");
  Dataset out = data;
  const FeatureView view = data.view();
  out.noisy_labels = sample_noisy_labels(*data.clean_labels, data.dim ? &view : nullptr, noise, k, seed);
  return out;
}

}  // namespace sepagg
