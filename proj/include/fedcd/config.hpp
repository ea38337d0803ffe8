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
#include <optional>
#include <string>
#include <vector>

#include "fedcd/aggregation.hpp"
#include "fedcd/lcdm.hpp"

namespace fedcd {

struct GraphSpec {
  std::string type = "er";  // er | chain | bidiag | collider | full | jungle | builtin
  std::size_t n_nodes = 8;
  double er_n = 1.0;
  std::string name;  // builtin graph name
  bool permute = true;
};

struct DataSpec {
  std::size_t n_obs = 10000;
  std::size_t n_int = 2000;
  std::size_t n_categories = 10;
  std::optional<std::vector<std::size_t>> intervened;  // default: every variable
  double mechanism_gain = 1.5;
};

enum class SplitMode { horizontal, vertical };
enum class Setup { federated, centralized, isolated };
enum class AggregationStrategy { naive, proximity };

struct ExperimentConfig {
  GraphSpec graph;
  DataSpec data;
  std::size_t clients = 2;
  SplitMode split = SplitMode::horizontal;
  std::optional<std::vector<std::vector<std::size_t>>> partition;  // vertical split; default contiguous chunks
  Setup setup = Setup::federated;
  std::size_t isolated_client = 0;
  AggregationStrategy aggregation = AggregationStrategy::proximity;
  double beta = 2.0;
  NonEdgeRule non_edges = NonEdgeRule::uniform;
  PathBeliefSource path_beliefs = PathBeliefSource::client;
  std::size_t rounds = 10;
  bool early_stop = false;
  double early_stop_tol = 1e-3;
  std::size_t shd_reversal_cost = 1;
  LcdmConfig lcdm;
  std::vector<std::uint64_t> seeds{0};
  std::string output_dir = "results";
  bool checkpoints = false;  // dump gamma, theta, model weights and traces per client

  /// Throws Error(config) listing every violated constraint.
  void validate() const;
};

/// Parses a JSON document. Unknown keys at any level are rejected; missing
/// keys keep their defaults.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string to_json(const ExperimentConfig& cfg, int indent = 2);

/// Equality of every field (used for round-trip checks).
bool same_config(const ExperimentConfig& a, const ExperimentConfig& b);

}  // namespace fedcd
