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
#include "fedcd/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "fedcd/error.hpp"
#include "fedcd/rng.hpp"

namespace fedcd {

std::size_t Adjacency::num_edges() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::vector<std::pair<std::size_t, std::size_t>> Adjacency::edges() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j)
      if ((*this)(i, j)) out.emplace_back(i, j);
  return out;
}

std::vector<std::size_t> Adjacency::parents(std::size_t j) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n_; ++i)
    if ((*this)(i, j)) out.push_back(i);
  return out;
}

std::vector<std::size_t> Adjacency::children(std::size_t i) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < n_; ++j)
    if ((*this)(i, j)) out.push_back(j);
  return out;
}

namespace {

// Kahn's algorithm; smallest available index first so the order is canonical.
std::vector<std::size_t> topo_sort(const Adjacency& a) {
  const std::size_t n = a.n_nodes();
  std::vector<std::size_t> indegree(n, 0);
  for (auto [i, j] : a.edges()) ++indegree[j];
  std::vector<std::size_t> order;
  order.reserve(n);
  std::vector<bool> done(n, false);
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t next = n;
    for (std::size_t v = 0; v < n; ++v)
      if (!done[v] && indegree[v] == 0) {
        next = v;
        break;
      }
    if (next == n) break;
    done[next] = true;
    order.push_back(next);
    for (std::size_t c = 0; c < n; ++c)
      if (a(next, c)) --indegree[c];
  }
  return order;
}

}  // namespace

Dag::Dag(Adjacency adjacency) : adj_(std::move(adjacency)) {
  for (std::size_t i = 0; i < adj_.n_nodes(); ++i)
    if (adj_(i, i)) throw invalid_argument("Dag: self-loop on node " + std::to_string(i));
  order_ = topo_sort(adj_);
  if (order_.size() != adj_.n_nodes()) throw invalid_argument("Dag: adjacency contains a directed cycle");
}

BeliefMatrix::BeliefMatrix(std::size_t n_nodes, double fill) : n_(n_nodes), psi_(n_nodes * n_nodes, fill) {
  if (!(fill >= 0.0 && fill <= 1.0)) throw invalid_argument("BeliefMatrix: fill value outside [0, 1]");
  for (std::size_t i = 0; i < n_; ++i) psi_[i * n_ + i] = 0.0;
}

BeliefMatrix::BeliefMatrix(std::size_t n_nodes, std::vector<double> values) : n_(n_nodes), psi_(std::move(values)) {
  if (psi_.size() != n_ * n_) throw invalid_argument("BeliefMatrix: expected N*N values");
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) {
      const double v = psi_[i * n_ + j];
      if (!(v >= 0.0 && v <= 1.0)) throw invalid_argument("BeliefMatrix: entry outside [0, 1]");
    }
    if (psi_[i * n_ + i] != 0.0) throw invalid_argument("BeliefMatrix: non-zero diagonal");
  }
}

void BeliefMatrix::set(std::size_t i, std::size_t j, double value) {
  if (!(value >= 0.0 && value <= 1.0)) throw invalid_argument("BeliefMatrix: entry outside [0, 1]");
  if (i == j && value != 0.0) throw invalid_argument("BeliefMatrix: diagonal must stay zero");
  psi_[i * n_ + j] = value;
}

StructuredKind parse_structured_kind(std::string_view name) {
  if (name == "chain") return StructuredKind::chain;
  if (name == "bidiag") return StructuredKind::bidiag;
  if (name == "collider") return StructuredKind::collider;
  if (name == "full") return StructuredKind::full;
  if (name == "jungle") return StructuredKind::jungle;
  throw invalid_argument("unknown structured graph kind '" + std::string(name) + "'");
}

std::string_view to_string(StructuredKind kind) {
  switch (kind) {
    case StructuredKind::chain: return "chain";
    case StructuredKind::bidiag: return "bidiag";
    case StructuredKind::collider: return "collider";
    case StructuredKind::full: return "full";
    case StructuredKind::jungle: return "jungle";
  }
  return "?";
}

Dag generate_er(std::size_t n_nodes, double er_n, std::uint64_t seed, bool permute_labels) {
  if (n_nodes < 2) throw invalid_argument("generate_er: need at least 2 nodes");
  if (!(er_n >= 0.0) || !std::isfinite(er_n)) throw invalid_argument("generate_er: er_n must be non-negative");
  const double pairs = 0.5 * static_cast<double>(n_nodes) * static_cast<double>(n_nodes - 1);
  const double p = er_n * static_cast<double>(n_nodes) / pairs;
  // Allow for rounding in callers that compute er_n = C(n,2)/n.
  if (p > 1.0 + 1e-12) throw invalid_argument("generate_er: implied edge probability exceeds 1");

  Rng rng(seed);
  Adjacency ordered(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i)
    for (std::size_t j = i + 1; j < n_nodes; ++j)
      if (rng.uniform() < p) ordered.set(i, j);
  if (!permute_labels) return Dag(std::move(ordered));

  std::vector<std::size_t> label(n_nodes);
  std::iota(label.begin(), label.end(), std::size_t{0});
  rng.shuffle(label);
  Adjacency permuted(n_nodes);
  for (auto [i, j] : ordered.edges()) permuted.set(label[i], label[j]);
  return Dag(std::move(permuted));
}

Dag generate_structured(StructuredKind kind, std::size_t n) {
  if (n < 2) throw invalid_argument("generate_structured: need at least 2 nodes");
  Adjacency a(n);
  switch (kind) {
    case StructuredKind::chain:
      for (std::size_t i = 0; i + 1 < n; ++i) a.set(i, i + 1);
      break;
    case StructuredKind::bidiag:
      for (std::size_t i = 0; i + 1 < n; ++i) {
        a.set(i, i + 1);
        if (i + 2 < n) a.set(i, i + 2);
      }
      break;
    case StructuredKind::collider:
      for (std::size_t i = 0; i + 1 < n; ++i) a.set(i, n - 1);
      break;
    case StructuredKind::full:
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) a.set(i, j);
      break;
    case StructuredKind::jungle:
      if (n < 3) throw invalid_argument("generate_structured: jungle needs at least 3 nodes");
      // Binary tree rooted at node 0; node i has parent (i-1)/2.
      for (std::size_t i = 1; i < n; ++i) {
        const std::size_t parent = (i - 1) / 2;
        a.set(parent, i);
        if (parent > 0) a.set((parent - 1) / 2, i);
      }
      break;
  }
  return Dag(std::move(a));
}

Adjacency belief_to_adjacency(const BeliefMatrix& psi, double threshold) {
  const std::size_t n = psi.n_nodes();
  Adjacency a(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && psi(i, j) > threshold) a.set(i, j);
  return a;
}

std::size_t shd(const Adjacency& a, const Adjacency& b, std::size_t reversal_cost) {
  if (a.n_nodes() != b.n_nodes()) throw invalid_argument("shd: graphs have different node counts");
  const std::size_t n = a.n_nodes();
  std::size_t total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (a(i, i) != b(i, i)) ++total;
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool aij = a(i, j), aji = a(j, i), bij = b(i, j), bji = b(j, i);
      if (aij == bij && aji == bji) continue;
      const bool reversed = (aij != aji) && (bij != bji) && aij == bji;
      total += reversed ? reversal_cost : static_cast<std::size_t>(aij != bij) + static_cast<std::size_t>(aji != bji);
    }
  }
  return total;
}

bool is_acyclic(const Adjacency& a) {
  for (std::size_t i = 0; i < a.n_nodes(); ++i)
    if (a(i, i)) return false;
  return topo_sort(a).size() == a.n_nodes();
}

std::vector<std::pair<std::size_t, std::size_t>> find_cycle(const Adjacency& a) {
  const std::size_t n = a.n_nodes();
  enum : std::uint8_t { unvisited, on_stack, finished };
  std::vector<std::uint8_t> state(n, unvisited);
  std::vector<std::size_t> path;
  std::vector<std::size_t> next_child;

  for (std::size_t root = 0; root < n; ++root) {
    if (state[root] != unvisited) continue;
    path.assign(1, root);
    next_child.assign(1, 0);
    state[root] = on_stack;
    while (!path.empty()) {
      const std::size_t v = path.back();
      std::size_t& c = next_child.back();
      while (c < n && !a(v, c)) ++c;
      if (c == n) {
        state[v] = finished;
        path.pop_back();
        next_child.pop_back();
        continue;
      }
      const std::size_t w = c++;
      if (state[w] == on_stack) {
        auto start = std::find(path.begin(), path.end(), w);
        std::vector<std::pair<std::size_t, std::size_t>> cycle;
        for (auto it = start; it + 1 != path.end(); ++it) cycle.emplace_back(*it, *(it + 1));
        cycle.emplace_back(v, w);
        return cycle;
      }
      if (state[w] == unvisited) {
        state[w] = on_stack;
        path.push_back(w);
        next_child.push_back(0);
      }
    }
  }
  return {};
}

Adjacency prune_to_dag(Adjacency a, const BeliefMatrix& psi) {
  if (psi.n_nodes() != a.n_nodes()) throw invalid_argument("prune_to_dag: belief/adjacency size mismatch");
  for (std::size_t i = 0; i < a.n_nodes(); ++i) a.set(i, i, false);
  for (auto cycle = find_cycle(a); !cycle.empty(); cycle = find_cycle(a)) {
    auto weakest = *std::min_element(cycle.begin(), cycle.end(), [&](const auto& l, const auto& r) {
      const double pl = psi(l.first, l.second), pr = psi(r.first, r.second);
      if (pl != pr) return pl < pr;
      return l < r;
    });
    a.set(weakest.first, weakest.second, false);
  }
  return a;
}

void write_edge_list(std::ostream& os, const Adjacency& a) {
  os << "nodes " << a.n_nodes() << '\n';
  for (auto [i, j] : a.edges()) os << i << ' ' << j << '\n';
}

Adjacency read_edge_list(std::istream& is) {
  std::string keyword;
  std::size_t n = 0;
  if (!(is >> keyword >> n) || keyword != "nodes") throw io_error("edge list: missing 'nodes N' header");
  Adjacency a(n);
  std::size_t i = 0, j = 0;
  while (is >> i >> j) {
    if (i >= n || j >= n) throw io_error("edge list: node index out of range");
    a.set(i, j);
  }
  if (!is.eof()) throw io_error("edge list: malformed edge line");
  return a;
}

void save_edge_list(const std::string& path, const Adjacency& a) {
  std::ofstream os(path);
  if (!os) throw io_error("cannot open '" + path + "' for writing");
  write_edge_list(os, a);
}

Adjacency load_edge_list(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw io_error("cannot open '" + path + "'");
  return read_edge_list(is);
}

void write_belief_csv(std::ostream& os, const BeliefMatrix& psi) {
  const std::size_t n = psi.n_nodes();
  std::ostringstream line;
  line << std::setprecision(17);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j) line << ',';
      line << psi(i, j);
    }
    line << '\n';
  }
  os << line.str();
}

BeliefMatrix read_belief_csv(std::istream& is) {
  std::vector<double> values;
  std::size_t rows = 0;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string cell;
    while (std::getline(cells, cell, ',')) values.push_back(std::stod(cell));
    ++rows;
  }
  if (values.size() != rows * rows) throw io_error("belief csv: matrix is not square");
  return BeliefMatrix(rows, std::move(values));
}

}  // namespace fedcd
