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
// Structures of the public bnlearn network repository (asia, sachs, alarm).
// Only the arcs are reproduced; conditional tables are synthesized elsewhere.

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "fedcd/error.hpp"
#include "fedcd/graph.hpp"

namespace fedcd {
namespace {

struct Network {
  std::vector<std::string> nodes;
  std::vector<std::pair<std::string, std::string>> arcs;
};

const Network& asia() {
  static const Network net{
      {"asia", "tub", "smoke", "lung", "bronc", "either", "xray", "dysp"},
      {{"asia", "tub"},
       {"smoke", "lung"},
       {"smoke", "bronc"},
       {"tub", "either"},
       {"lung", "either"},
       {"either", "xray"},
       {"either", "dysp"},
       {"bronc", "dysp"}}};
  return net;
}

const Network& sachs() {
  static const Network net{
      {"Raf", "Mek", "Plcg", "PIP2", "PIP3", "Erk", "Akt", "PKA", "PKC", "P38", "Jnk"},
      {{"Erk", "Akt"},  {"Mek", "Erk"},  {"PIP3", "PIP2"}, {"PKA", "Akt"},  {"PKA", "Erk"},  {"PKA", "Jnk"},
       {"PKA", "Mek"},  {"PKA", "P38"},  {"PKA", "Raf"},   {"PKC", "Jnk"},  {"PKC", "Mek"},  {"PKC", "P38"},
       {"PKC", "PKA"},  {"PKC", "Raf"},  {"Plcg", "PIP2"}, {"Plcg", "PIP3"}, {"Raf", "Mek"}}};
  return net;
}

const Network& alarm() {
  static const Network net{
      {"HIST", "CVP",  "PCWP", "HYP",  "LVV",  "LVF",  "STKV", "ERLO", "HRBP", "HREK", "ERCA", "HRSA", "ANES",
       "APL",  "TPR",  "ECO2", "KINK", "MINV", "FIO2", "PVS",  "SAO2", "PAP",  "PMB",  "SHNT", "INT",  "PRSS",
       "DISC", "MVS",  "VMCH", "VTUB", "VLNG", "VALV", "ACO2", "CCHL", "HR",   "CO",   "BP"},
      {{"LVF", "HIST"},  {"LVV", "CVP"},   {"LVV", "PCWP"},  {"HYP", "LVV"},   {"LVF", "LVV"},   {"HYP", "STKV"},
       {"LVF", "STKV"},  {"ERLO", "HRBP"}, {"HR", "HRBP"},   {"ERCA", "HREK"}, {"HR", "HREK"},   {"ERCA", "HRSA"},
       {"HR", "HRSA"},   {"APL", "TPR"},   {"ACO2", "ECO2"}, {"VLNG", "ECO2"}, {"INT", "MINV"},  {"VLNG", "MINV"},
       {"FIO2", "PVS"},  {"VALV", "PVS"},  {"PVS", "SAO2"},  {"SHNT", "SAO2"}, {"PMB", "PAP"},   {"INT", "SHNT"},
       {"PMB", "SHNT"},  {"INT", "PRSS"},  {"KINK", "PRSS"}, {"VTUB", "PRSS"}, {"MVS", "VMCH"},  {"DISC", "VTUB"},
       {"VMCH", "VTUB"}, {"INT", "VLNG"},  {"KINK", "VLNG"}, {"VTUB", "VLNG"}, {"INT", "VALV"},  {"VLNG", "VALV"},
       {"VALV", "ACO2"}, {"ACO2", "CCHL"}, {"ANES", "CCHL"}, {"SAO2", "CCHL"}, {"TPR", "CCHL"},  {"CCHL", "HR"},
       {"HR", "CO"},     {"STKV", "CO"},   {"CO", "BP"},     {"TPR", "BP"}}};
  return net;
}

const Network& lookup(std::string_view name) {
  if (name == "asia") return asia();
  if (name == "sachs") return sachs();
  if (name == "alarm") return alarm();
  throw invalid_argument("unknown built-in graph '" + std::string(name) + "'");
}

}  // namespace

Dag load_builtin(std::string_view name) {
  const Network& net = lookup(name);
  auto index = [&](const std::string& label) {
    auto it = std::find(net.nodes.begin(), net.nodes.end(), label);
    return static_cast<std::size_t>(it - net.nodes.begin());
  };
  Adjacency a(net.nodes.size());
  for (const auto& [from, to] : net.arcs) a.set(index(from), index(to));
  return Dag(std::move(a));
}

std::vector<std::string> builtin_node_names(std::string_view name) { return lookup(name).nodes; }

}  // namespace fedcd
