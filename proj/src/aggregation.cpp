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
#include "fedcd/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "fedcd/error.hpp"

namespace fedcd {

BeliefMatrix naive_aggregate(std::span<const BeliefMatrix> beliefs, std::span<const std::size_t> sizes) {
  if (beliefs.empty()) throw invalid_argument("naive_aggregate: no client beliefs");
  if (beliefs.size() != sizes.size()) throw invalid_argument("naive_aggregate: beliefs/sizes length mismatch");
  const std::size_t n = beliefs.front().n_nodes();
  double total = 0.0;
  for (std::size_t k = 0; k < beliefs.size(); ++k) {
    if (beliefs[k].n_nodes() != n) throw invalid_argument("naive_aggregate: inconsistent dimensions");
    total += static_cast<double>(sizes[k]);
  }
  if (total <= 0.0) throw invalid_argument("naive_aggregate: all client sizes are zero");
  std::vector<double> out(n * n, 0.0);
  for (std::size_t k = 0; k < beliefs.size(); ++k) {
    const double w = static_cast<double>(sizes[k]) / total;
    const auto& v = beliefs[k].values();
    for (std::size_t e = 0; e < out.size(); ++e) out[e] += w * v[e];
  }
  for (double& v : out) v = std::clamp(v, 0.0, 1.0);
  return BeliefMatrix(n, std::move(out));
}

ReliabilityScores mass_flow_reliability(const Adjacency& structure, const BeliefMatrix& client_belief,
                                        const MassMap& masses) {
  const std::size_t n = structure.n_nodes();
  if (client_belief.n_nodes() != n) throw invalid_argument("mass_flow_reliability: dimension mismatch");
  for (const auto& [s, _] : masses)
    if (s >= n) throw invalid_argument("mass_flow_reliability: intervened variable out of range");
  const Dag dag(structure);

  ReliabilityScores out{n, std::vector<double>(n * n, 0.0)};
  if (masses.empty()) return out;

  // reach[v]: largest mass arriving at v over all sources and paths.
  std::vector<double> reach(n, 0.0);
  for (const auto& [s, m] : masses) reach[s] = std::max(reach[s], m);
  for (std::size_t i : dag.topological_order()) {
    if (reach[i] == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (!structure(i, j)) continue;
      const double flow = reach[i] * client_belief(i, j);
      out.r[i * n + j] = flow;
      reach[j] = std::max(reach[j], flow);
    }
  }
  return out;
}

ReliabilityScores mass_flow_reliability(const BeliefMatrix& psi_prev, const BeliefMatrix& client_belief,
                                        const MassMap& masses) {
  return mass_flow_reliability(prune_to_dag(belief_to_adjacency(psi_prev), psi_prev), client_belief, masses);
}

ReliabilityScores mass_flow_reliability_bruteforce(const Adjacency& structure, const BeliefMatrix& client_belief,
                                                   const MassMap& masses) {
  const std::size_t n = structure.n_nodes();
  if (client_belief.n_nodes() != n) throw invalid_argument("mass_flow_reliability: dimension mismatch");
  ReliabilityScores out{n, std::vector<double>(n * n, 0.0)};
  std::vector<std::size_t> path;
  std::vector<bool> on_path(n, false);
  // Depth-first enumeration of every simple path from each source; each path
  // prefix ending in edge (i, j) is a candidate for r_ij.
  std::function<void(double)> extend = [&](double mass) {
    const std::size_t i = path.back();
    for (std::size_t j = 0; j < n; ++j) {
      if (!structure(i, j) || on_path[j]) continue;
      const double flow = mass * client_belief(i, j);
      out.r[i * n + j] = std::max(out.r[i * n + j], flow);
      path.push_back(j);
      on_path[j] = true;
      extend(flow);
      on_path[j] = false;
      path.pop_back();
    }
  };
  for (const auto& [s, m] : masses) {
    path.assign(1, s);
    on_path.assign(n, false);
    on_path[s] = true;
    extend(m);
  }
  return out;
}

std::vector<double> softmax_weights(std::span<const double> scores, double beta) {
  if (scores.empty()) return {};
  const double top = beta * *std::max_element(scores.begin(), scores.end());
  std::vector<double> w(scores.size());
  double total = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    w[k] = std::exp(beta * scores[k] - top);
    total += w[k];
  }
  for (double& v : w) v /= total;
  return w;
}

BeliefMatrix proximity_aggregate(const BeliefMatrix& psi_prev, std::span<const ClientSummary> clients,
                                 const ProximityOptions& options, std::vector<ReliabilityScores>* scores_out) {
  if (clients.empty()) throw invalid_argument("proximity_aggregate: no clients");
  if (!(options.beta > 0.0)) throw invalid_argument("proximity_aggregate: beta must be > 0");
  const std::size_t n = psi_prev.n_nodes();
  for (const auto& c : clients)
    if (c.belief == nullptr || c.masses == nullptr || c.belief->n_nodes() != n)
      throw invalid_argument("proximity_aggregate: inconsistent client summary");

  Adjacency structure = prune_to_dag(belief_to_adjacency(psi_prev), psi_prev);
  const BeliefMatrix* path_source_belief = nullptr;
  BeliefMatrix dense_prev;
  if (options.non_edges == NonEdgeRule::path_product) {
    // Every off-diagonal pair carries flow; break cycles by previous belief.
    Adjacency dense(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j && psi_prev(i, j) > 0.0) dense.set(i, j);
    structure = prune_to_dag(std::move(dense), psi_prev);
  }
  if (options.path_beliefs == PathBeliefSource::aggregated) path_source_belief = &psi_prev;

  const std::size_t k_clients = clients.size();
  std::vector<ReliabilityScores> scores;
  scores.reserve(k_clients);
  for (const auto& c : clients)
    scores.push_back(mass_flow_reliability(structure, path_source_belief ? *path_source_belief : *c.belief, *c.masses));

  std::vector<double> out(n * n, 0.0);
  std::vector<double> r(k_clients);
  const double uniform = 1.0 / static_cast<double>(k_clients);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double acc = 0.0;
      if (structure(i, j)) {
        for (std::size_t k = 0; k < k_clients; ++k) r[k] = scores[k](i, j);
        const auto w = softmax_weights(r, options.beta);
        for (std::size_t k = 0; k < k_clients; ++k) acc += w[k] * (*clients[k].belief)(i, j);
      } else {
        for (std::size_t k = 0; k < k_clients; ++k) acc += uniform * (*clients[k].belief)(i, j);
      }
      out[i * n + j] = std::clamp(acc, 0.0, 1.0);
    }
  if (scores_out) *scores_out = std::move(scores);
  return BeliefMatrix(n, std::move(out));
}

std::vector<MassMap> normalized_masses(std::span<const std::map<std::size_t, std::size_t>> counts) {
  std::size_t top = 0;
  for (const auto& c : counts)
    for (const auto& [_, v] : c) top = std::max(top, v);
  std::vector<MassMap> out(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k)
    for (const auto& [s, v] : counts[k]) out[k][s] = top ? static_cast<double>(v) / static_cast<double>(top) : 0.0;
  return out;
}

}  // namespace fedcd
