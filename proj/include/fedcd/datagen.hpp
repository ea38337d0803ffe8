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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedcd/graph.hpp"
#include "fedcd/mlp.hpp"

namespace fedcd {

/// Row-major table of category indices, one column per variable.
class Table {
 public:
  Table() = default;
  explicit Table(std::size_t n_cols, std::size_t n_rows = 0) : n_cols_(n_cols), data_(n_cols * n_rows) {}

  std::size_t n_cols() const noexcept { return n_cols_; }
  std::size_t n_rows() const noexcept { return n_cols_ ? data_.size() / n_cols_ : 0; }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const std::uint8_t> row(std::size_t r) const { return {data_.data() + r * n_cols_, n_cols_}; }
  std::span<std::uint8_t> row(std::size_t r) { return {data_.data() + r * n_cols_, n_cols_}; }
  void append(std::span<const std::uint8_t> row) { data_.insert(data_.end(), row.begin(), row.end()); }
  const std::vector<std::uint8_t>& data() const noexcept { return data_; }

  friend bool operator==(const Table&, const Table&) = default;

 private:
  std::size_t n_cols_ = 0;
  std::vector<std::uint8_t> data_;
};

struct MechanismOptions {
  std::size_t n_categories = 10;
  std::size_t embedding_dim = 16;
  std::size_t hidden = 48;
  double gain = 1.5;
};

/// Ground-truth causal mechanism: a DAG plus one randomly initialized
/// categorical MLP per node whose inputs are the node's parents.
class Mechanism {
 public:
  Mechanism(Dag dag, const MechanismOptions& options, std::uint64_t seed);

  const Dag& dag() const noexcept { return dag_; }
  std::size_t n_nodes() const noexcept { return dag_.n_nodes(); }
  std::size_t n_categories() const noexcept { return options_.n_categories; }

  /// p(X_node | parents) for a full assignment; only parent entries are read.
  std::vector<double> conditional(std::size_t node, std::span<const std::uint8_t> assignment) const;

 private:
  Dag dag_;
  MechanismOptions options_;
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<CategoricalMlp> nets_;
};

Mechanism init_mechanism(const Dag& dag, std::size_t n_categories, std::uint64_t seed, double gain = 1.5);

/// Ancestral sampling of the unperturbed system.
Table sample_observational(const Mechanism& m, std::size_t n, std::uint64_t seed);

/// Perfect intervention on `target`: its value is uniform over categories,
/// everything else follows the unmodified conditionals.
Table sample_interventional(const Mechanism& m, std::size_t target, std::size_t n, std::uint64_t seed);

struct Dataset {
  std::size_t n_nodes = 0;
  std::size_t n_categories = 0;
  Table observational;
  std::map<std::size_t, Table> interventional;  // keyed by intervened variable

  std::vector<std::size_t> intervened() const;
  std::size_t interventional_rows() const;
  std::size_t total_rows() const { return observational.n_rows() + interventional_rows(); }
  void validate() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Observational table of n_obs rows plus n_int rows divided equally among
/// `targets` (remainder to the lowest targets).
Dataset generate_dataset(const Mechanism& m, std::size_t n_obs, std::size_t n_int,
                         const std::vector<std::size_t>& targets, std::uint64_t seed);

/// Disjoint row partition of every table. Empty interventional shards are
/// dropped so a shard's keys always have data.
std::vector<Dataset> split_horizontal(const Dataset& d, std::size_t k, std::optional<std::vector<double>> weights,
                                      std::uint64_t seed);

/// Observational rows split equally; shard k receives the interventional
/// tables whose target is in partition[k].
std::vector<Dataset> split_vertical_interventions(const Dataset& d,
                                                  const std::vector<std::vector<std::size_t>>& partition,
                                                  std::uint64_t seed);

// Directory layout: obs.csv, int_<node>.csv, manifest.json.
void save_dataset(const std::string& dir, const Dataset& d, const std::string& manifest_json);
Dataset load_dataset(const std::string& dir);
void write_table_csv(std::ostream& os, const Table& t);
Table read_table_csv(std::istream& is);

}  // namespace fedcd
