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
#include "fedcd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fedcd/error.hpp"
#include "fedcd/rng.hpp"

namespace fedcd {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path seed_dir(const std::string& out, std::uint64_t seed) { return fs::path(out) / ("seed_" + std::to_string(seed)); }

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw io_error("cannot write " + path.string());
  return os;
}

void write_text(const fs::path& path, const std::string& text) {
  auto os = open_out(path);
  os << text;
}

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

const char* split_name(SplitMode m) { return m == SplitMode::horizontal ? "horizontal" : "vertical"; }

}  // namespace

void write_history_csv(std::ostream& os, const std::vector<RoundRecord>& history) {
  std::ostringstream out;
  out << "round,client_id,shd,entropy,wall_ms\n";
  auto row = [&](std::size_t round, const std::string& id, const std::optional<std::size_t>& shd_value, double entropy,
                 double wall_ms) {
    out << round << ',' << id << ',';
    if (shd_value) out << *shd_value;
    out << ',' << format_double(entropy) << ',' << format_double(wall_ms) << '\n';
  };
  for (const auto& r : history) {
    for (const auto& c : r.clients) {
      if (!c.participated) continue;
      row(r.round, std::to_string(c.client_id), c.shd, c.entropy, c.wall_ms);
    }
    row(r.round, "server", r.shd, r.entropy, r.wall_ms);
  }
  os << out.str();
}

void generate_datasets(const ExperimentConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  for (const auto seed : cfg.seeds) {
    const fs::path dir = seed_dir(out_dir, seed);
    fs::create_directories(dir);
    const Dag truth = build_truth(cfg, seed);
    save_edge_list((dir / "truth_graph.txt").string(), truth.adjacency());
    const Dataset global = build_dataset(cfg, seed, truth);
    json manifest = {{"n_nodes", global.n_nodes},
                     {"n_categories", global.n_categories},
                     {"seed", seed},
                     {"split", {{"kind", "global"}}}};
    save_dataset((dir / "global").string(), global, manifest.dump(2));

    ExperimentConfig federated = cfg;
    federated.setup = Setup::federated;
    const auto shards = build_shards(federated, seed, global);
    for (std::size_t k = 0; k < shards.size(); ++k) {
      json m = {{"n_nodes", shards[k].n_nodes},
                {"n_categories", shards[k].n_categories},
                {"seed", seed},
                {"split",
                 {{"kind", split_name(cfg.split)},
                  {"client", k},
                  {"clients", shards.size()},
                  {"split_seed", derive_seed(seed, {4})},
                  {"intervened", shards[k].intervened()}}}};
      save_dataset((dir / ("client_" + std::to_string(k))).string(), shards[k], m.dump(2));
    }
  }
  write_text(fs::path(out_dir) / "config.json", to_json(cfg) + "\n");
}

RunSummary summarize(std::vector<SeedOutcome> seeds) {
  RunSummary s;
  s.seeds = std::move(seeds);
  std::vector<double> values;
  for (const auto& o : s.seeds)
    if (o.final_shd) values.push_back(static_cast<double>(*o.final_shd));
  s.n_ok = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean_shd = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean_shd) * (v - s.mean_shd);
    const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    s.stderr_shd = sd / std::sqrt(static_cast<double>(values.size()));
  }
  s.ci95_low = s.mean_shd - 1.96 * s.stderr_shd;
  s.ci95_high = s.mean_shd + 1.96 * s.stderr_shd;
  return s;
}

RunSummary run_all(const ExperimentConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  fs::create_directories(out_dir);
  write_text(fs::path(out_dir) / "config.json", to_json(cfg) + "\n");

  std::vector<SeedOutcome> outcomes(cfg.seeds.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) {
      const auto seed = cfg.seeds[i];
      outcomes[i].seed = seed;
      try {
        const fs::path dir = seed_dir(out_dir, seed);
        fs::create_directories(dir);
        const auto result =
            run_experiment(cfg, seed, nullptr, cfg.checkpoints ? (dir / "checkpoints").string() : std::string{});
        {
          auto os = open_out(dir / "history.csv");
          write_history_csv(os, result.history);
        }
        save_edge_list((dir / "final_graph.txt").string(), result.final_graph);
        save_edge_list((dir / "truth_graph.txt").string(), result.truth.adjacency());
        {
          auto os = open_out(dir / "final_belief.csv");
          write_belief_csv(os, result.final_psi);
        }
        outcomes[i].final_shd = result.final_shd;
      } catch (const std::exception& e) {
        outcomes[i].error = e.what();
        std::lock_guard lock(log_mu);
        std::cerr << "warning: seed " << seed << " failed: " << e.what() << '\n';
      }
    }
  };
  const std::size_t n_threads = std::min(thread_cap(), cfg.seeds.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  RunSummary summary = summarize(std::move(outcomes));
  {
    auto os = open_out(fs::path(out_dir) / "finals.csv");
    os << "seed,final_shd,error\n";
    for (const auto& o : summary.seeds) {
      os << o.seed << ',';
      if (o.final_shd) os << *o.final_shd;
      std::string err = o.error;
      std::replace(err.begin(), err.end(), ',', ';');
      std::replace(err.begin(), err.end(), '\n', ' ');
      os << ',' << err << '\n';
    }
  }
  {
    auto os = open_out(fs::path(out_dir) / "summary.csv");
    os << "n_seeds,n_ok,mean_shd,stderr,ci95_low,ci95_high\n"
       << summary.seeds.size() << ',' << summary.n_ok << ',' << format_double(summary.mean_shd) << ','
       << format_double(summary.stderr_shd) << ',' << format_double(summary.ci95_low) << ','
       << format_double(summary.ci95_high) << '\n';
  }
  if (summary.n_ok == 0 && !summary.seeds.empty()) throw runtime_error("every seed failed");
  return summary;
}

SweepAxis parse_sweep_axis(const std::string& name) {
  if (name == "clients") return SweepAxis::clients;
  if (name == "int_size") return SweepAxis::int_size;
  if (name == "beta") return SweepAxis::beta;
  throw invalid_argument("unknown sweep axis '" + name + "' (expected clients|int_size|beta)");
}

std::vector<SweepRow> sweep(const ExperimentConfig& cfg, SweepAxis axis, const std::vector<double>& values,
                            const std::string& out_dir) {
  if (values.empty()) throw invalid_argument("sweep: empty values list");
  const char* axis_name = axis == SweepAxis::clients ? "clients" : axis == SweepAxis::int_size ? "int_size" : "beta";
  std::vector<ExperimentConfig> configs;
  for (double v : values) {
    ExperimentConfig c = cfg;
    if (axis != SweepAxis::beta && (v < 0.0 || v != std::floor(v)))
      throw invalid_argument(std::string("sweep: ") + axis_name + " values must be non-negative integers");
    if (axis == SweepAxis::clients) c.clients = static_cast<std::size_t>(v);
    if (axis == SweepAxis::int_size) c.data.n_int = static_cast<std::size_t>(v);
    if (axis == SweepAxis::beta) c.beta = v;
    c.validate();
    configs.push_back(std::move(c));
  }

  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const fs::path dir = fs::path(out_dir) / (std::string(axis_name) + "_" + format_double(values[i]));
    SweepRow row;
    row.value = values[i];
    try {
      row.summary = run_all(configs[i], dir.string());
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::runtime) throw;
      std::cerr << "warning: " << axis_name << "=" << format_double(values[i]) << ": " << e.what() << '\n';
    }
    rows.push_back(std::move(row));
  }

  auto os = open_out(fs::path(out_dir) / "sweep.csv");
  os << "axis,value,n_seeds,n_ok,mean_shd,stderr,ci95_low,ci95_high\n";
  for (const auto& r : rows) {
    const auto& s = r.summary;
    os << axis_name << ',' << format_double(r.value) << ',' << configs.front().seeds.size() << ',' << s.n_ok << ','
       << format_double(s.mean_shd) << ',' << format_double(s.stderr_shd) << ',' << format_double(s.ci95_low) << ','
       << format_double(s.ci95_high) << '\n';
  }
  bool any_ok = false;
  for (const auto& r : rows) any_ok = any_ok || r.summary.n_ok > 0;
  if (!any_ok) throw runtime_error("sweep: every run failed");
  return rows;
}

EvalReport evaluate(const std::string& result_dir, const std::string& truth_path, std::size_t reversal_cost) {
  const fs::path root(result_dir);
  std::ifstream finals(root / "finals.csv");
  if (!finals) throw io_error("cannot read " + (root / "finals.csv").string());
  std::optional<Adjacency> supplied;
  if (!truth_path.empty()) supplied = load_edge_list(truth_path);

  EvalReport report;
  std::string line;
  std::getline(finals, line);
  if (line.rfind("seed,final_shd", 0) != 0) throw io_error("finals.csv: unexpected header");
  while (std::getline(finals, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() < 2) throw io_error("finals.csv: malformed row '" + line + "'");
    if (cells[1].empty()) continue;  // failed seed
    EvalEntry entry;
    try {
      entry.seed = std::stoull(cells[0]);
      entry.stored_shd = std::stoull(cells[1]);
    } catch (const std::exception&) {
      throw io_error("finals.csv: malformed row '" + line + "'");
    }
    const fs::path dir = seed_dir(result_dir, entry.seed);
    const Adjacency final_graph = load_edge_list((dir / "final_graph.txt").string());
    const Adjacency truth = supplied ? *supplied : load_edge_list((dir / "truth_graph.txt").string());
    if (truth.n_nodes() != final_graph.n_nodes())
      throw invalid_argument("eval: truth has " + std::to_string(truth.n_nodes()) + " nodes but seed " +
                             std::to_string(entry.seed) + " produced " + std::to_string(final_graph.n_nodes()));
    entry.recomputed_shd = shd(final_graph, truth, reversal_cost);
    if (!supplied && entry.recomputed_shd != *entry.stored_shd) report.consistent = false;
    report.entries.push_back(entry);
  }
  double sum = 0.0;
  for (const auto& e : report.entries) sum += static_cast<double>(e.recomputed_shd);
  if (!report.entries.empty()) report.mean_shd = sum / static_cast<double>(report.entries.size());

  // The stored summary should agree with the stored per-seed finals.
  std::ifstream summary(root / "summary.csv");
  if (summary && std::getline(summary, line) && std::getline(summary, line)) {
    const auto cells = split_csv_line(line);
    if (cells.size() >= 3 && !report.entries.empty()) {
      double stored_sum = 0.0;
      for (const auto& e : report.entries) stored_sum += static_cast<double>(*e.stored_shd);
      const double stored_mean = stored_sum / static_cast<double>(report.entries.size());
      if (std::abs(std::stod(cells[2]) - stored_mean) > 1e-6) report.consistent = false;
    }
  }
  return report;
}

}  // namespace fedcd
