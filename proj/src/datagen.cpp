/*
 * Copyright 2026 The fedcd Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "fedcd/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fedcd/error.hpp"
#include "fedcd/rng.hpp"

namespace fedcd {

Mechanism::Mechanism(Dag dag, const MechanismOptions& options, std::uint64_t seed)
    : dag_(std::move(dag)), options_(options) {
  if (options_.n_categories < 2) throw invalid_argument("mechanism: need at least 2 categories");
  if (options_.n_categories > 255) throw invalid_argument("mechanism: at most 255 categories");
  Rng rng(seed);
  for (std::size_t j = 0; j < dag_.n_nodes(); ++j) {
    parents_.push_back(dag_.parents(j));
    CategoricalMlp net({parents_.back().size(), options_.n_categories, options_.embedding_dim, options_.hidden});
    net.initialize(rng, options_.gain);
    nets_.push_back(std::move(net));
  }
}

std::vector<double> Mechanism::conditional(std::size_t node, std::span<const std::uint8_t> assignment) const {
  const auto& pa = parents_.at(node);
  std::vector<std::uint8_t> inputs(pa.size());
  std::vector<std::size_t> active(pa.size());
  for (std::size_t k = 0; k < pa.size(); ++k) {
    inputs[k] = assignment[pa[k]];
    active[k] = k;
  }
  std::vector<double> p(options_.n_categories);
  nets_[node].log_probs(inputs, active, p);
  for (double& v : p) v = std::exp(v);
  return p;
}

Mechanism init_mechanism(const Dag& dag, std::size_t n_categories, std::uint64_t seed, double gain) {
  MechanismOptions options;
  options.n_categories = n_categories;
  options.gain = gain;
  return Mechanism(dag, options, seed);
}

namespace {

Table ancestral_sample(const Mechanism& m, std::optional<std::size_t> target, std::size_t n, std::uint64_t seed) {
  const std::size_t n_nodes = m.n_nodes();
  Table out(n_nodes, n);
  Rng rng(seed);
  const std::vector<double> uniform(m.n_categories(), 1.0);
  for (std::size_t r = 0; r < n; ++r) {
    auto row = out.row(r);
    for (std::size_t node : m.dag().topological_order()) {
      if (target && node == *target) {
        row[node] = static_cast<std::uint8_t>(rng.categorical(uniform));
      } else {
        const auto p = m.conditional(node, row);
        row[node] = static_cast<std::uint8_t>(rng.categorical(p));
      }
    }
  }
  return out;
}

// Largest-remainder apportionment of `total` items by `weights`.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& weights) {
  std::vector<std::size_t> counts(weights.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const double exact = weights[k] * static_cast<double>(total);
    counts[k] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[k];
    remainders.emplace_back(exact - std::floor(exact), k);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < total; ++r, ++assigned) ++counts[remainders[r % remainders.size()].second];
  return counts;
}

std::vector<Table> split_rows(const Table& t, const std::vector<double>& weights, Rng& rng) {
  std::vector<std::size_t> order(t.n_rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  const auto counts = apportion(t.n_rows(), weights);
  std::vector<Table> shards;
  std::size_t pos = 0;
  for (std::size_t c : counts) {
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(pos),
                                 order.begin() + static_cast<std::ptrdiff_t>(pos + c));
    std::sort(idx.begin(), idx.end());
    Table shard(t.n_cols());
    for (std::size_t r : idx) shard.append(t.row(r));
    shards.push_back(std::move(shard));
    pos += c;
  }
  return shards;
}

}  // namespace

Table sample_observational(const Mechanism& m, std::size_t n, std::uint64_t seed) {
  return ancestral_sample(m, std::nullopt, n, seed);
}

Table sample_interventional(const Mechanism& m, std::size_t target, std::size_t n, std::uint64_t seed) {
  if (target >= m.n_nodes()) throw invalid_argument("sample_interventional: invalid target " + std::to_string(target));
  return ancestral_sample(m, target, n, seed);
}

std::vector<std::size_t> Dataset::intervened() const {
  std::vector<std::size_t> keys;
  for (const auto& [k, _] : interventional) keys.push_back(k);
  return keys;
}

std::size_t Dataset::interventional_rows() const {
  std::size_t total = 0;
  for (const auto& [_, t] : interventional) total += t.n_rows();
  return total;
}

void Dataset::validate() const {
  auto check = [&](const Table& t) {
    if (t.n_rows() > 0 && t.n_cols() != n_nodes) throw invalid_argument("dataset: table width differs from n_nodes");
    for (auto v : t.data())
      if (v >= n_categories) throw invalid_argument("dataset: category index out of range");
  };
  check(observational);
  for (const auto& [k, t] : interventional) {
    if (k >= n_nodes) throw invalid_argument("dataset: interventional key out of range");
    check(t);
  }
}

Dataset generate_dataset(const Mechanism& m, std::size_t n_obs, std::size_t n_int,
                         const std::vector<std::size_t>& targets, std::uint64_t seed) {
  Dataset d;
  d.n_nodes = m.n_nodes();
  d.n_categories = m.n_categories();
  d.observational = sample_observational(m, n_obs, derive_seed(seed, {0}));
  if (targets.empty() || n_int == 0) return d;
  const std::size_t base = n_int / targets.size();
  const std::size_t extra = n_int % targets.size();
  std::vector<std::size_t> sorted = targets;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw invalid_argument("generate_dataset: duplicate intervention target");
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    const std::size_t rows = base + (k < extra ? 1 : 0);
    if (rows == 0) continue;
    d.interventional[sorted[k]] = sample_interventional(m, sorted[k], rows, derive_seed(seed, {1, sorted[k]}));
  }
  return d;
}

std::vector<Dataset> split_horizontal(const Dataset& d, std::size_t k, std::optional<std::vector<double>> weights,
                                      std::uint64_t seed) {
  if (k == 0) throw invalid_argument("split_horizontal: k must be >= 1");
  if (k > d.observational.n_rows()) throw invalid_argument("split_horizontal: more shards than observational rows");
  std::vector<double> w = weights.value_or(std::vector<double>(k, 1.0 / static_cast<double>(k)));
  if (w.size() != k) throw invalid_argument("split_horizontal: weights must have k entries");
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-9 || std::any_of(w.begin(), w.end(), [](double x) { return x < 0.0; }))
    throw invalid_argument("split_horizontal: weights must be non-negative and sum to 1");
  if (k == 1) return {d};

  Rng rng(seed);
  std::vector<Dataset> shards(k);
  for (auto& s : shards) {
    s.n_nodes = d.n_nodes;
    s.n_categories = d.n_categories;
  }
  auto obs = split_rows(d.observational, w, rng);
  for (std::size_t c = 0; c < k; ++c) shards[c].observational = std::move(obs[c]);
  for (const auto& [target, table] : d.interventional) {
    auto parts = split_rows(table, w, rng);
    for (std::size_t c = 0; c < k; ++c)
      if (!parts[c].empty()) shards[c].interventional[target] = std::move(parts[c]);
  }
  return shards;
}

std::vector<Dataset> split_vertical_interventions(const Dataset& d,
                                                  const std::vector<std::vector<std::size_t>>& partition,
                                                  std::uint64_t seed) {
  if (partition.empty()) throw invalid_argument("split_vertical_interventions: empty partition");
  std::set<std::size_t> seen;
  for (const auto& part : partition)
    for (std::size_t v : part)
      if (!seen.insert(v).second)
        throw invalid_argument("split_vertical_interventions: variable " + std::to_string(v) +
                               " appears in more than one part");
  const auto keys = d.intervened();
  if (!std::equal(seen.begin(), seen.end(), keys.begin(), keys.end()))
    throw invalid_argument("split_vertical_interventions: partition must cover exactly the intervened variables");

  const std::size_t k = partition.size();
  if (k > d.observational.n_rows()) throw invalid_argument("split_vertical_interventions: more shards than rows");
  Rng rng(seed);
  auto obs = split_rows(d.observational, std::vector<double>(k, 1.0 / static_cast<double>(k)), rng);
  std::vector<Dataset> shards(k);
  for (std::size_t c = 0; c < k; ++c) {
    shards[c].n_nodes = d.n_nodes;
    shards[c].n_categories = d.n_categories;
    shards[c].observational = std::move(obs[c]);
    for (std::size_t v : partition[c]) shards[c].interventional[v] = d.interventional.at(v);
  }
  return shards;
}

void write_table_csv(std::ostream& os, const Table& t) {
  std::string out;
  for (std::size_t c = 0; c < t.n_cols(); ++c) {
    if (c) out += ',';
    out += 'x' + std::to_string(c);
  }
  out += '\n';
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    auto row = t.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += std::to_string(static_cast<unsigned>(row[c]));
    }
    out += '\n';
  }
  os << out;
}

Table read_table_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw io_error("table csv: missing header");
  const std::size_t n_cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  Table t(n_cols);
  std::vector<std::uint8_t> row(n_cols);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(cells, cell, ',')) {
      if (c >= n_cols) throw io_error("table csv: row wider than header");
      const int v = std::stoi(cell);
      if (v < 0 || v > 255) throw io_error("table csv: category out of range");
      row[c++] = static_cast<std::uint8_t>(v);
    }
    if (c != n_cols) throw io_error("table csv: row narrower than header");
    t.append(row);
  }
  return t;
}

void save_dataset(const std::string& dir, const Dataset& d, const std::string& manifest_json) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto write = [&](const std::string& name, const Table& t) {
    std::ofstream os(fs::path(dir) / name);
    if (!os) throw io_error("cannot write " + name + " in " + dir);
    write_table_csv(os, t.n_cols() ? t : Table(d.n_nodes));
  };
  write("obs.csv", d.observational);
  for (const auto& [k, t] : d.interventional) write("int_" + std::to_string(k) + ".csv", t);
  std::ofstream manifest(fs::path(dir) / "manifest.json");
  if (!manifest) throw io_error("cannot write manifest.json in " + dir);
  manifest << manifest_json << '\n';
}

Dataset load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream manifest_in(fs::path(dir) / "manifest.json");
  if (!manifest_in) throw io_error("dataset directory '" + dir + "' has no manifest.json");
  nlohmann::json manifest;
  try {
    manifest_in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw io_error(std::string("manifest.json: ") + e.what());
  }
  Dataset d;
  d.n_nodes = manifest.at("n_nodes").get<std::size_t>();
  d.n_categories = manifest.at("n_categories").get<std::size_t>();
  auto read = [&](const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw io_error("cannot open " + path.string());
    return read_table_csv(is);
  };
  d.observational = read(fs::path(dir) / "obs.csv");
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("int_", 0) != 0 || entry.path().extension() != ".csv") continue;
    const std::size_t node = std::stoul(name.substr(4, name.size() - 8));
    d.interventional[node] = read(entry.path());
  }
  d.validate();
  return d;
}

}  // namespace fedcd
