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

#include "fedcd/config.hpp"
#include "fedcd/federation.hpp"

namespace fedcd {

/// Writes, per seed, the global dataset, every client shard and the truth
/// graph under out_dir/seed_<s>/.
void generate_datasets(const ExperimentConfig& cfg, const std::string& out_dir);

struct SeedOutcome {
  std::uint64_t seed = 0;
  std::optional<std::size_t> final_shd;  // empty when the seed failed
  std::string error;
};

struct RunSummary {
  std::vector<SeedOutcome> seeds;
  std::size_t n_ok = 0;
  double mean_shd = 0.0;
  double stderr_shd = 0.0;
  double ci95_low = 0.0;
  double ci95_high = 0.0;
};

/// mean and mean +/- 1.96 standard errors over the successful seeds.
RunSummary summarize(std::vector<SeedOutcome> seeds);

/// Runs every seed and writes out_dir/seed_<s>/{history.csv, final_graph.txt,
/// truth_graph.txt, final_belief.csv}, out_dir/finals.csv, out_dir/summary.csv
/// and out_dir/config.json.
RunSummary run_all(const ExperimentConfig& cfg, const std::string& out_dir);

enum class SweepAxis { clients, int_size, beta };
SweepAxis parse_sweep_axis(const std::string& name);

struct SweepRow {
  double value = 0.0;
  RunSummary summary;
};

/// One run_all per value under out_dir/<axis>_<value>/, merged into out_dir/sweep.csv.
std::vector<SweepRow> sweep(const ExperimentConfig& cfg, SweepAxis axis, const std::vector<double>& values,
                            const std::string& out_dir);

struct EvalEntry {
  std::uint64_t seed = 0;
  std::optional<std::size_t> stored_shd;
  std::size_t recomputed_shd = 0;
};

struct EvalReport {
  std::vector<EvalEntry> entries;
  bool consistent = true;  // stored finals match the summary and, against the stored truth, recomputation
  double mean_shd = 0.0;
};

/// Recomputes the SHD of each stored final graph against `truth_path` (or the
/// stored truth when empty) and cross-checks finals.csv.
EvalReport evaluate(const std::string& result_dir, const std::string& truth_path, std::size_t reversal_cost = 1);

void write_history_csv(std::ostream& os, const std::vector<RoundRecord>& history);

}  // namespace fedcd
