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
#include "fedcd/federation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <thread>

#include "fedcd/error.hpp"
#include "fedcd/rng.hpp"

namespace fedcd {

namespace {

enum SeedTag : std::uint64_t { graph_tag = 1, mechanism_tag, data_tag, split_tag, client_tag };

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

double binary_entropy(double p) {
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

}  // namespace

void AuditLog::record(AuditEntry entry) {
  std::lock_guard lock(mu_);
  entries_.push_back(std::move(entry));
}

std::vector<AuditEntry> AuditLog::entries() const {
  std::lock_guard lock(mu_);
  return entries_;
}

Client::Client(std::size_t id, Dataset data, LcdmConfig cfg)
    : id_(id), data_(std::move(data)), cfg_(cfg), state_(cfg.seed), prior_(data_.n_nodes, 0.5) {}

ClientMessage Client::local_round(std::size_t round) {
  LcdmConfig cfg = cfg_;
  cfg.seed = derive_seed(cfg_.seed, {round});
  auto result = run_lcdm(data_, prior_, cfg, state_);
  history_.push_back(result.psi);
  last_ = result;

  ClientMessage msg;
  msg.client_id = id_;
  msg.psi = std::move(result.psi);
  msg.n_samples = data_.total_rows();
  for (const auto& [v, t] : data_.interventional) msg.intervention_counts[v] = t.n_rows();
  return msg;
}

void Client::save_checkpoint(const std::string& dir) const {
  if (!last_) return;
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream os(std::filesystem::path(dir) / name);
    if (!os) throw io_error("cannot write checkpoint file in " + dir);
    return os;
  };
  {
    auto os = open("graph_params.csv");
    write_graph_params_csv(os, last_->params);
  }
  if (state_.models) {
    auto os = open("models.csv");
    write_model_weights_csv(os, *state_.models);
  }
  {
    auto os = open("dist_trace.csv");
    write_trace_csv(os, last_->dist_trace, "held_out_nll");
  }
  {
    auto os = open("graph_trace.csv");
    write_trace_csv(os, last_->graph_trace, "interventional_nll");
  }
}

double avg_edge_entropy(const BeliefMatrix& psi) {
  const std::size_t n = psi.n_nodes();
  if (n < 2) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) total += binary_entropy(psi(i, j));
  return total / static_cast<double>(n * (n - 1));
}

std::size_t thread_cap() {
  if (const char* env = std::getenv("FEDCAUSAL_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

RoundRecord run_round(ServerState& server, std::vector<Client>& clients, const RoundOptions& options) {
  if (clients.empty()) throw invalid_argument("run_round: no clients");
  const auto round_start = std::chrono::steady_clock::now();
  const std::size_t round = server.round;
  const std::size_t n = server.psi.n_nodes();

  struct Outcome {
    std::optional<ClientMessage> message;
    std::string error;
    double wall_ms = 0.0;
  };
  std::vector<Outcome> outcomes(clients.size());
  {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t k = next++; k < clients.size(); k = next++) {
        const auto start = std::chrono::steady_clock::now();
        try {
          outcomes[k].message = clients[k].local_round(round);
        } catch (const std::exception& e) {
          outcomes[k].error = e.what();
        }
        outcomes[k].wall_ms = elapsed_ms(start);
      }
    };
    const std::size_t cap = options.max_threads ? options.max_threads : thread_cap();
    const std::size_t n_threads = std::min(cap, clients.size());
    if (n_threads <= 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
  }

  RoundRecord record;
  record.round = round;
  std::vector<ClientMessage> received;
  for (std::size_t k = 0; k < clients.size(); ++k) {
    ClientRoundMetrics metrics;
    metrics.client_id = clients[k].id();
    metrics.wall_ms = outcomes[k].wall_ms;
    if (!outcomes[k].message) {
      metrics.participated = false;
      metrics.error = outcomes[k].error;
      std::cerr << "warning: client " << clients[k].id() << " skipped in round " << round << ": "
                << outcomes[k].error << '\n';
      record.clients.push_back(std::move(metrics));
      continue;
    }
    ClientMessage& msg = *outcomes[k].message;
    if (msg.psi.n_nodes() != n) throw runtime_error("run_round: client belief has wrong dimension");
    if (options.audit) {
      options.audit->record({round, msg.client_id, "client->server", {"psi", "n_samples", "intervention_counts"},
                             msg.psi.values().size() + 1 + 2 * msg.intervention_counts.size()});
    }
    metrics.entropy = avg_edge_entropy(msg.psi);
    if (options.truth)
      metrics.shd = shd(prune_to_dag(belief_to_adjacency(msg.psi), msg.psi), *options.truth, options.shd_reversal_cost);
    record.clients.push_back(std::move(metrics));
    received.push_back(std::move(msg));
  }
  if (received.empty()) throw runtime_error("run_round: every client failed in round " + std::to_string(round));

  std::vector<BeliefMatrix> beliefs;
  std::vector<std::size_t> sizes;
  std::vector<std::map<std::size_t, std::size_t>> counts;
  for (const auto& m : received) {
    beliefs.push_back(m.psi);
    sizes.push_back(m.n_samples);
    counts.push_back(m.intervention_counts);
  }
  if (server.strategy == AggregationStrategy::naive) {
    server.psi = naive_aggregate(beliefs, sizes);
  } else {
    const auto masses = normalized_masses(counts);
    std::vector<ClientSummary> summaries;
    for (std::size_t k = 0; k < beliefs.size(); ++k) summaries.push_back({&beliefs[k], &masses[k]});
    server.psi = proximity_aggregate(server.psi, summaries, server.proximity);
  }

  for (auto& c : clients) {
    c.receive_broadcast(server.psi);
    if (options.audit) options.audit->record({round, c.id(), "server->client", {"psi"}, server.psi.values().size()});
  }
  ++server.round;

  record.entropy = avg_edge_entropy(server.psi);
  if (options.truth)
    record.shd = shd(prune_to_dag(belief_to_adjacency(server.psi), server.psi), *options.truth, options.shd_reversal_cost);
  record.wall_ms = elapsed_ms(round_start);
  return record;
}

Dag build_truth(const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto& g = cfg.graph;
  if (g.type == "er") return generate_er(g.n_nodes, g.er_n, derive_seed(seed, {graph_tag}), g.permute);
  if (g.type == "builtin") return load_builtin(g.name);
  return generate_structured(parse_structured_kind(g.type), g.n_nodes);
}

Dataset build_dataset(const ExperimentConfig& cfg, std::uint64_t seed, const Dag& truth) {
  const Mechanism mech =
      init_mechanism(truth, cfg.data.n_categories, derive_seed(seed, {mechanism_tag}), cfg.data.mechanism_gain);
  std::vector<std::size_t> targets;
  if (cfg.data.intervened) {
    targets = *cfg.data.intervened;
  } else {
    targets.resize(truth.n_nodes());
    std::iota(targets.begin(), targets.end(), std::size_t{0});
  }
  return generate_dataset(mech, cfg.data.n_obs, cfg.data.n_int, targets, derive_seed(seed, {data_tag}));
}

namespace {

std::vector<std::vector<std::size_t>> default_partition(const std::vector<std::size_t>& vars, std::size_t k) {
  std::vector<std::vector<std::size_t>> parts(k);
  const std::size_t base = vars.size() / k, extra = vars.size() % k;
  std::size_t pos = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const std::size_t len = base + (c < extra ? 1 : 0);
    parts[c].assign(vars.begin() + static_cast<std::ptrdiff_t>(pos),
                    vars.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return parts;
}

}  // namespace

std::vector<Dataset> build_shards(const ExperimentConfig& cfg, std::uint64_t seed, const Dataset& global) {
  if (cfg.setup == Setup::centralized) return {global};
  const std::uint64_t split_seed = derive_seed(seed, {split_tag});
  std::vector<Dataset> shards;
  if (cfg.split == SplitMode::horizontal) {
    shards = split_horizontal(global, cfg.clients, std::nullopt, split_seed);
  } else {
    const auto partition = cfg.partition.value_or(default_partition(global.intervened(), cfg.clients));
    shards = split_vertical_interventions(global, partition, split_seed);
  }
  if (cfg.setup == Setup::isolated) return {shards.at(cfg.isolated_client)};
  return shards;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::uint64_t seed, AuditLog* audit,
                                const std::string& checkpoint_dir) {
  cfg.validate();
  ExperimentResult result;
  result.seed = seed;
  result.truth = build_truth(cfg, seed);
  const Dataset global = build_dataset(cfg, seed, result.truth);
  auto shards = build_shards(cfg, seed, global);

  std::vector<Client> clients;
  for (std::size_t k = 0; k < shards.size(); ++k) {
    LcdmConfig lcdm = cfg.lcdm;
    lcdm.seed = derive_seed(seed, {client_tag, k, cfg.lcdm.seed});
    const std::size_t id = cfg.setup == Setup::isolated ? cfg.isolated_client : k;
    clients.emplace_back(id, std::move(shards[k]), lcdm);
  }

  ServerState server;
  server.psi = BeliefMatrix(result.truth.n_nodes(), 0.5);
  server.strategy = cfg.aggregation;
  server.proximity = {cfg.beta, cfg.non_edges, cfg.path_beliefs};

  RoundOptions options;
  options.truth = &result.truth.adjacency();
  options.shd_reversal_cost = cfg.shd_reversal_cost;
  options.audit = audit;
  for (std::size_t t = 0; t < cfg.rounds; ++t) {
    const BeliefMatrix before = server.psi;
    result.history.push_back(run_round(server, clients, options));
    if (cfg.early_stop) {
      double delta = 0.0;
      for (std::size_t e = 0; e < before.values().size(); ++e)
        delta = std::max(delta, std::abs(before.values()[e] - server.psi.values()[e]));
      if (delta < cfg.early_stop_tol) break;
    }
  }
  if (!checkpoint_dir.empty())
    for (const auto& c : clients)
      c.save_checkpoint((std::filesystem::path(checkpoint_dir) / ("client_" + std::to_string(c.id()))).string());
  result.final_psi = server.psi;
  result.final_graph = prune_to_dag(belief_to_adjacency(server.psi), server.psi);
  result.final_shd = shd(result.final_graph, result.truth.adjacency(), cfg.shd_reversal_cost);
  return result;
}

}  // namespace fedcd
