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
// Command-line front end. Uses only the C interface of libfedcd.
#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "fedcd/fedcd.h"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_runtime = 1;
constexpr int exit_usage = 2;

int report(fedcd_status s, const char* what) {
  if (s == FEDCD_OK) return exit_ok;
  std::cerr << "fedcd " << what << ": " << fedcd_last_error() << '\n';
  return (s == FEDCD_ERR_CONFIG || s == FEDCD_ERR_INVALID_ARGUMENT) ? exit_usage : exit_runtime;
}

// "0,3,5-9" -> {0,3,5,6,7,8,9}
bool parse_seeds(const std::string& text, std::vector<std::uint64_t>& out) {
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, comma - pos);
    try {
      std::size_t used = 0;
      const std::uint64_t lo = std::stoull(item, &used);
      std::uint64_t hi = lo;
      if (used < item.size()) {
        if (item[used] != '-') return false;
        std::size_t used_hi = 0;
        hi = std::stoull(item.substr(used + 1), &used_hi);
        if (used + 1 + used_hi != item.size() || hi < lo || hi - lo > 100000) return false;
      }
      for (std::uint64_t s = lo; s <= hi; ++s) out.push_back(s);
    } catch (const std::exception&) {
      return false;
    }
    pos = comma + 1;
  }
  return !out.empty();
}

struct ConfigHandle {
  fedcd_config* cfg = nullptr;
  ~ConfigHandle() { fedcd_config_free(cfg); }
};

// Loads the config and applies flag overrides (flags win over file values).
int load(const std::string& path, const std::string& seeds, const std::string& out, ConfigHandle& h) {
  if (const int rc = report(fedcd_config_load(path.c_str(), &h.cfg), "config"); rc != exit_ok) return exit_usage;
  if (!seeds.empty()) {
    std::vector<std::uint64_t> list;
    if (!parse_seeds(seeds, list)) {
      std::cerr << "fedcd: invalid --seeds '" << seeds << "' (expected e.g. 0,2,5-9)\n";
      return exit_usage;
    }
    if (report(fedcd_config_set_seeds(h.cfg, list.data(), list.size()), "config") != exit_ok) return exit_usage;
  }
  if (!out.empty()) fedcd_config_set_output_dir(h.cfg, out.c_str());
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated causal discovery experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(fedcd_version()));

  std::string config, out, seeds, axis, truth, report_path;
  std::vector<double> values;
  std::size_t reversal_cost = 1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config, "Experiment config (JSON)")->required();
    cmd->add_option("--out", out, "Output directory (overrides output_dir)");
    cmd->add_option("--seeds", seeds, "Seeds, e.g. 0,1,4-7 (overrides seeds)");
  };
  auto* gen = app.add_subcommand("generate", "Write datasets and truth graphs per seed");
  add_common(gen);
  auto* run = app.add_subcommand("run", "Run every seed and summarize final SHD");
  add_common(run);
  auto* sw = app.add_subcommand("sweep", "Run one experiment per axis value and merge summaries");
  add_common(sw);
  sw->add_option("--axis", axis, "clients | int_size | beta")
      ->required()
      ->check(CLI::IsMember({"clients", "int_size", "beta"}));
  sw->add_option("--values", values, "Comma-separated axis values")->required()->delimiter(',');
  auto* ev = app.add_subcommand("eval", "Recompute SHD of stored final graphs");
  std::string result_dir;
  ev->add_option("results", result_dir, "Result directory written by run")->required();
  ev->add_option("--truth", truth, "Truth graph edge list (default: stored per seed)");
  ev->add_option("--out", report_path, "Write the per-seed report CSV here");
  ev->add_option("--reversal-cost", reversal_cost, "SHD cost of a reversed edge")->check(CLI::Range(1, 2));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_usage;
  }

  if (ev->parsed()) {
    fedcd_eval_summary s{};
    const int rc = report(fedcd_eval(result_dir.c_str(), truth.empty() ? nullptr : truth.c_str(), reversal_cost,
                                     report_path.empty() ? nullptr : report_path.c_str(), &s),
                          "eval");
    if (rc != exit_ok) return rc;
    std::printf("seeds %zu mean_shd %.4f consistent %s\n", s.n_seeds, s.mean_shd, s.consistent ? "yes" : "no");
    return s.consistent || !truth.empty() ? exit_ok : exit_runtime;
  }

  ConfigHandle h;
  if (const int rc = load(config, seeds, out, h); rc != exit_ok) return rc;
  if (gen->parsed()) return report(fedcd_generate(h.cfg, nullptr), "generate");
  if (run->parsed()) {
    fedcd_run_summary s{};
    const int rc = report(fedcd_run(h.cfg, nullptr, &s), "run");
    if (rc == exit_ok)
      std::printf("seeds %zu ok %zu mean_shd %.4f ci95 [%.4f, %.4f]\n", s.n_seeds, s.n_ok, s.mean_shd, s.ci95_low,
                  s.ci95_high);
    return rc;
  }
  if (values.empty()) {
    std::cerr << "fedcd sweep: --values is empty\n";
    return exit_usage;
  }
  return report(fedcd_sweep(h.cfg, axis.c_str(), values.data(), values.size(), nullptr), "sweep");
}
