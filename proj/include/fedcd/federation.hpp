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
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "fedcd/aggregation.hpp"
#include "fedcd/config.hpp"
#include "fedcd/datagen.hpp"
#include "fedcd/graph.hpp"
#include "fedcd/lcdm.hpp"

namespace fedcd {

/// Everything a client ever sends to the server.
struct ClientMessage {
  std::size_t client_id = 0;
  BeliefMatrix psi;
  std::size_t n_samples = 0;                            // |D^k|
  std::map<std::size_t, std::size_t> intervention_counts;  // X^k_I with per-variable sample counts
};

/// Server-side record of every value crossing the client boundary.
struct AuditEntry {
  std::size_t round = 0;
  std::size_t client_id = 0;
  std::string direction;            // "client->server" or "server->client"
  std::vector<std::string> fields;  // names of the transmitted fields
  std::size_t scalar_count = 0;     // number of scalars transmitted
};

class AuditLog {
 public:
  void record(AuditEntry entry);
  std::vector<AuditEntry> entries() const;

 private:
  mutable std::mutex mu_;
  std::vector<AuditEntry> entries_;
};

/// One federation participant. The local dataset never leaves this object;
/// the only outbound value is the ClientMessage built in local_round().
class Client {
 public:
  Client(std::size_t id, Dataset data, LcdmConfig cfg);

  std::size_t id() const noexcept { return id_; }
  std::vector<std::size_t> intervened() const { return data_.intervened(); }
  const BeliefMatrix& prior() const noexcept { return prior_; }
  const std::vector<BeliefMatrix>& history() const noexcept { return history_; }

  void receive_broadcast(const BeliefMatrix& psi) { prior_ = psi; }

  /// Runs local discovery against the current prior.
  ClientMessage local_round(std::size_t round);

  /// Writes gamma.csv, theta.csv, models.csv and the loss traces of the last
  /// local round into `dir`. No-op before the first round.
  void save_checkpoint(const std::string& dir) const;

 private:
  std::size_t id_;
  Dataset data_;
  LcdmConfig cfg_;
  LcdmState state_;
  BeliefMatrix prior_;
  std::vector<BeliefMatrix> history_;
  std::optional<LcdmResult> last_;
};

struct ServerState {
  BeliefMatrix psi;
  std::size_t round = 0;
  AggregationStrategy strategy = AggregationStrategy::proximity;
  ProximityOptions proximity;
};

struct ClientRoundMetrics {
  std::size_t client_id = 0;
  bool participated = true;
  std::optional<std::size_t> shd;
  double entropy = 0.0;
  double wall_ms = 0.0;
  std::string error;
};

struct RoundRecord {
  std::size_t round = 0;
  std::vector<ClientRoundMetrics> clients;
  std::optional<std::size_t> shd;  // aggregated belief vs truth
  double entropy = 0.0;            // of the aggregated belief
  double wall_ms = 0.0;
};

/// Mean binary entropy (bits) over off-diagonal entries.
double avg_edge_entropy(const BeliefMatrix& psi);

struct RoundOptions {
  const Adjacency* truth = nullptr;
  std::size_t shd_reversal_cost = 1;
  AuditLog* audit = nullptr;
  std::size_t max_threads = 0;  // 0: FEDCAUSAL_THREADS or hardware concurrency
};

/// Local discovery on every client (concurrently), aggregation, broadcast.
RoundRecord run_round(ServerState& server, std::vector<Client>& clients, const RoundOptions& options);

struct ExperimentResult {
  std::uint64_t seed = 0;
  Dag truth;
  std::vector<RoundRecord> history;
  BeliefMatrix final_psi;
  Adjacency final_graph;
  std::size_t final_shd = 0;
};

/// Truth graph for a seed (graph generation only).
Dag build_truth(const ExperimentConfig& cfg, std::uint64_t seed);

/// Builds truth, mechanism and dataset for a seed; returns the global dataset.
Dataset build_dataset(const ExperimentConfig& cfg, std::uint64_t seed, const Dag& truth);

/// Client shards per the config's split and setup.
std::vector<Dataset> build_shards(const ExperimentConfig& cfg, std::uint64_t seed, const Dataset& global);

/// When `checkpoint_dir` is non-empty each client's checkpoint goes to
/// checkpoint_dir/client_<id>/ after the last round.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::uint64_t seed, AuditLog* audit = nullptr,
                                const std::string& checkpoint_dir = {});

std::size_t thread_cap();

}  // namespace fedcd
