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
#include <map>
#include <span>
#include <vector>

#include "fedcd/graph.hpp"

namespace fedcd {

/// Weighted average with weights size_k / sum(size).
BeliefMatrix naive_aggregate(std::span<const BeliefMatrix> beliefs, std::span<const std::size_t> sizes);

/// Injected mass per intervened variable of one client.
using MassMap = std::map<std::size_t, double>;

/// Per-client N x N reliability scores, zero outside the edges of the
/// structure they were computed on.
struct ReliabilityScores {
  std::size_t n_nodes = 0;
  std::vector<double> r;
  double operator()(std::size_t i, std::size_t j) const { return r[i * n_nodes + j]; }
};

/// Mass-flow reliability on a DAG `structure`: for each edge (i, j) the
/// maximum over intervened sources s and directed paths s -> ... -> i -> j of
/// m_s times the product of the client's beliefs along the path.
/// Computed by max-product dynamic programming in topological order.
ReliabilityScores mass_flow_reliability(const Adjacency& structure, const BeliefMatrix& client_belief,
                                        const MassMap& masses);

/// Same, with the structure taken as prune_to_dag(threshold(psi_prev)).
ReliabilityScores mass_flow_reliability(const BeliefMatrix& psi_prev, const BeliefMatrix& client_belief,
                                        const MassMap& masses);

/// Reference implementation by explicit enumeration of every directed path.
/// Exponential; intended for small graphs and tests.
ReliabilityScores mass_flow_reliability_bruteforce(const Adjacency& structure, const BeliefMatrix& client_belief,
                                                   const MassMap& masses);

/// exp(beta r_k) / sum exp(beta r), evaluated with the max subtracted.
std::vector<double> softmax_weights(std::span<const double> scores, double beta);

enum class NonEdgeRule {
  uniform,       // entries outside the previous structure are averaged with equal weights
  path_product,  // reliability computed on the full dense belief structure instead
};

enum class PathBeliefSource {
  client,      // path products use each client's own beliefs
  aggregated,  // path products use the previous aggregated belief
};

struct ProximityOptions {
  double beta = 2.0;
  NonEdgeRule non_edges = NonEdgeRule::uniform;
  PathBeliefSource path_beliefs = PathBeliefSource::client;
};

struct ClientSummary {
  const BeliefMatrix* belief = nullptr;
  const MassMap* masses = nullptr;  // keys are the client's intervened variables
};

/// Reliability-weighted aggregation. Returns the new belief and, optionally,
/// the per-client reliability scores used.
BeliefMatrix proximity_aggregate(const BeliefMatrix& psi_prev, std::span<const ClientSummary> clients,
                                 const ProximityOptions& options, std::vector<ReliabilityScores>* scores_out = nullptr);

/// m_s^k = count_s^k / max count over all clients and variables.
std::vector<MassMap> normalized_masses(std::span<const std::map<std::size_t, std::size_t>> counts);

}  // namespace fedcd
