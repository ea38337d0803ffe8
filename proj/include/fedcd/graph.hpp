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
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fedcd {

/// Dense N x N boolean adjacency. Entry (i, j) means X_i -> X_j. May contain
/// cycles; see Dag for the acyclic wrapper.
class Adjacency {
 public:
  Adjacency() = default;
  explicit Adjacency(std::size_t n_nodes) : n_(n_nodes), bits_(n_nodes * n_nodes, 0) {}

  std::size_t n_nodes() const noexcept { return n_; }
  bool operator()(std::size_t i, std::size_t j) const { return bits_[i * n_ + j] != 0; }
  void set(std::size_t i, std::size_t j, bool value = true) { bits_[i * n_ + j] = value ? 1 : 0; }

  std::size_t num_edges() const;
  std::vector<std::pair<std::size_t, std::size_t>> edges() const;
  std::vector<std::size_t> parents(std::size_t j) const;
  std::vector<std::size_t> children(std::size_t i) const;

  friend bool operator==(const Adjacency&, const Adjacency&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Directed acyclic graph over N variables. Construction validates the
/// no-self-loop and acyclicity invariants; the object is immutable afterwards.
class Dag {
 public:
  Dag() = default;
  explicit Dag(Adjacency adjacency);

  std::size_t n_nodes() const noexcept { return adj_.n_nodes(); }
  std::size_t num_edges() const { return adj_.num_edges(); }
  bool has_edge(std::size_t i, std::size_t j) const { return adj_(i, j); }
  const Adjacency& adjacency() const noexcept { return adj_; }
  const std::vector<std::size_t>& topological_order() const noexcept { return order_; }
  std::vector<std::size_t> parents(std::size_t j) const { return adj_.parents(j); }

  friend bool operator==(const Dag& a, const Dag& b) { return a.adj_ == b.adj_; }

 private:
  Adjacency adj_;
  std::vector<std::size_t> order_;
};

/// Matrix of independent Bernoulli edge-existence parameters. Entries lie in
/// [0, 1] and the diagonal is exactly zero.
class BeliefMatrix {
 public:
  BeliefMatrix() = default;
  /// All off-diagonal entries set to `fill`.
  explicit BeliefMatrix(std::size_t n_nodes, double fill = 0.0);
  BeliefMatrix(std::size_t n_nodes, std::vector<double> values);

  std::size_t n_nodes() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return psi_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, double value);
  const std::vector<double>& values() const noexcept { return psi_; }

  friend bool operator==(const BeliefMatrix&, const BeliefMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> psi_;
};

enum class StructuredKind { chain, bidiag, collider, full, jungle };

StructuredKind parse_structured_kind(std::string_view name);
std::string_view to_string(StructuredKind kind);

/// Erdos-Renyi DAG with edge probability chosen so that the expected edge
/// count is er_n * n_nodes. Pairs are oriented low index -> high index; when
/// `permute_labels` is set, node labels are shuffled afterwards.
Dag generate_er(std::size_t n_nodes, double er_n, std::uint64_t seed, bool permute_labels = true);

Dag generate_structured(StructuredKind kind, std::size_t n_nodes);

/// Built-in structures: "asia", "sachs", "alarm".
Dag load_builtin(std::string_view name);
std::vector<std::string> builtin_node_names(std::string_view name);

/// Strict threshold: edge iff psi_ij > threshold.
Adjacency belief_to_adjacency(const BeliefMatrix& psi, double threshold = 0.5);

/// Structural Hamming distance. Per unordered pair the cost is 0 when equal,
/// `reversal_cost` when each side holds exactly one opposite edge, otherwise
/// the number of differing directed entries.
std::size_t shd(const Adjacency& a, const Adjacency& b, std::size_t reversal_cost = 1);

bool is_acyclic(const Adjacency& a);

/// Directed cycle as a list of edges, or empty if acyclic. The search starts
/// from the lowest node index and expands children in index order.
std::vector<std::pair<std::size_t, std::size_t>> find_cycle(const Adjacency& a);

/// Repeatedly breaks the first found cycle by removing its lowest-belief edge
/// (ties: smallest (i, j)).
Adjacency prune_to_dag(Adjacency a, const BeliefMatrix& psi);

// Text formats.
void write_edge_list(std::ostream& os, const Adjacency& a);
Adjacency read_edge_list(std::istream& is);
void save_edge_list(const std::string& path, const Adjacency& a);
Adjacency load_edge_list(const std::string& path);
void write_belief_csv(std::ostream& os, const BeliefMatrix& psi);
BeliefMatrix read_belief_csv(std::istream& is);

}  // namespace fedcd
