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
#include "fedcd/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include <json.hpp>

#include "fedcd/error.hpp"
#include "fedcd/graph.hpp"

namespace fedcd {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw config_error(where + ": expected an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw config_error(where + ": unknown key '" + key + "'");
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
    if (!it->is_number_unsigned()) throw config_error(where + "." + key + ": expected a non-negative integer");
  }
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw config_error(where + "." + key + ": " + e.what());
  }
}

template <class E>
E parse_enum(const std::string& value, std::initializer_list<std::pair<const char*, E>> options,
             const std::string& where) {
  for (const auto& [name, e] : options)
    if (value == name) return e;
  throw config_error(where + ": invalid value '" + value + "'");
}

template <class E>
std::string enum_name(E value, std::initializer_list<std::pair<const char*, E>> options) {
  for (const auto& [name, e] : options)
    if (value == e) return name;
  return "?";
}

constexpr std::initializer_list<std::pair<const char*, SplitMode>> split_names{{"horizontal", SplitMode::horizontal},
                                                                               {"vertical", SplitMode::vertical}};
constexpr std::initializer_list<std::pair<const char*, Setup>> setup_names{
    {"federated", Setup::federated}, {"centralized", Setup::centralized}, {"isolated", Setup::isolated}};
constexpr std::initializer_list<std::pair<const char*, AggregationStrategy>> aggregation_names{
    {"naive", AggregationStrategy::naive}, {"proximity", AggregationStrategy::proximity}};
constexpr std::initializer_list<std::pair<const char*, NonEdgeRule>> non_edge_names{
    {"uniform", NonEdgeRule::uniform}, {"path_product", NonEdgeRule::path_product}};
constexpr std::initializer_list<std::pair<const char*, PathBeliefSource>> path_names{
    {"client", PathBeliefSource::client}, {"aggregated", PathBeliefSource::aggregated}};
constexpr std::initializer_list<std::pair<const char*, BeliefInit>> init_names{
    {"deterministic", BeliefInit::deterministic}, {"stochastic", BeliefInit::stochastic}};
constexpr std::initializer_list<std::pair<const char*, PriorGradient>> prior_grad_names{
    {"expected", PriorGradient::expected}, {"score_function", PriorGradient::score_function}};

LcdmConfig parse_lcdm(const json& j, LcdmConfig c) {
  const std::string where = "lcdm";
  reject_unknown(j,
                 {"alternations", "initial_dist_epochs", "dist_epochs", "graph_epochs", "min_graph_steps", "min_dist_steps", "batch_size",
                  "graph_batch_size", "adjacency_samples", "lr_model", "momentum", "lr_gamma", "lr_theta",
                  "lambda_sparse", "lambda_prior", "mask_drop_prob", "held_out_fraction", "belief_clamp", "init",
                  "stochastic_init_logit", "prior_gradient", "warm_start_graph", "warm_start_models", "embedding_dim",
                  "hidden", "seed"},
                 where);
  read(j, "alternations", c.alternations, where);
  read(j, "initial_dist_epochs", c.initial_dist_epochs, where);
  read(j, "dist_epochs", c.dist_epochs, where);
  read(j, "graph_epochs", c.graph_epochs, where);
  read(j, "min_graph_steps", c.min_graph_steps, where);
  read(j, "min_dist_steps", c.min_dist_steps, where);
  read(j, "batch_size", c.batch_size, where);
  read(j, "graph_batch_size", c.graph_batch_size, where);
  read(j, "adjacency_samples", c.adjacency_samples, where);
  read(j, "lr_model", c.lr_model, where);
  read(j, "momentum", c.momentum, where);
  read(j, "lr_gamma", c.lr_gamma, where);
  read(j, "lr_theta", c.lr_theta, where);
  read(j, "lambda_sparse", c.lambda_sparse, where);
  read(j, "lambda_prior", c.lambda_prior, where);
  read(j, "mask_drop_prob", c.mask_drop_prob, where);
  read(j, "held_out_fraction", c.held_out_fraction, where);
  read(j, "belief_clamp", c.belief_clamp, where);
  read(j, "stochastic_init_logit", c.stochastic_init_logit, where);
  read(j, "warm_start_graph", c.warm_start_graph, where);
  read(j, "warm_start_models", c.warm_start_models, where);
  read(j, "embedding_dim", c.embedding_dim, where);
  read(j, "hidden", c.hidden, where);
  read(j, "seed", c.seed, where);
  if (j.contains("init")) c.init = parse_enum(j["init"].get<std::string>(), init_names, where + ".init");
  if (j.contains("prior_gradient"))
    c.prior_gradient = parse_enum(j["prior_gradient"].get<std::string>(), prior_grad_names, where + ".prior_gradient");
  return c;
}

json lcdm_to_json(const LcdmConfig& c) {
  return json{{"alternations", c.alternations},
              {"initial_dist_epochs", c.initial_dist_epochs},
              {"dist_epochs", c.dist_epochs},
              {"graph_epochs", c.graph_epochs},
              {"min_graph_steps", c.min_graph_steps},
              {"min_dist_steps", c.min_dist_steps},
              {"batch_size", c.batch_size},
              {"graph_batch_size", c.graph_batch_size},
              {"adjacency_samples", c.adjacency_samples},
              {"lr_model", c.lr_model},
              {"momentum", c.momentum},
              {"lr_gamma", c.lr_gamma},
              {"lr_theta", c.lr_theta},
              {"lambda_sparse", c.lambda_sparse},
              {"lambda_prior", c.lambda_prior},
              {"mask_drop_prob", c.mask_drop_prob},
              {"held_out_fraction", c.held_out_fraction},
              {"belief_clamp", c.belief_clamp},
              {"init", enum_name(c.init, init_names)},
              {"stochastic_init_logit", c.stochastic_init_logit},
              {"prior_gradient", enum_name(c.prior_gradient, prior_grad_names)},
              {"warm_start_graph", c.warm_start_graph},
              {"warm_start_models", c.warm_start_models},
              {"embedding_dim", c.embedding_dim},
              {"hidden", c.hidden},
              {"seed", c.seed}};
}

}  // namespace

namespace {

ExperimentConfig parse_config_document(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw config_error(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(root,
                 {"graph", "data", "clients", "split", "partition", "setup", "isolated_client", "aggregation", "beta",
                  "non_edges", "path_beliefs", "rounds", "early_stop", "early_stop_tol", "shd_reversal_cost", "lcdm",
                  "seeds", "output_dir", "checkpoints"},
                 "config");
  ExperimentConfig c;
  if (root.contains("graph")) {
    const auto& g = root["graph"];
    reject_unknown(g, {"type", "n_nodes", "er_n", "name", "permute"}, "graph");
    read(g, "type", c.graph.type, "graph");
    read(g, "n_nodes", c.graph.n_nodes, "graph");
    read(g, "er_n", c.graph.er_n, "graph");
    read(g, "name", c.graph.name, "graph");
    read(g, "permute", c.graph.permute, "graph");
  }
  if (root.contains("data")) {
    const auto& d = root["data"];
    reject_unknown(d, {"n_obs", "n_int", "n_categories", "intervened", "mechanism_gain"}, "data");
    read(d, "n_obs", c.data.n_obs, "data");
    read(d, "n_int", c.data.n_int, "data");
    read(d, "n_categories", c.data.n_categories, "data");
    read(d, "mechanism_gain", c.data.mechanism_gain, "data");
    if (d.contains("intervened") && !d["intervened"].is_null()) {
      std::vector<std::size_t> v;
      read(d, "intervened", v, "data");
      c.data.intervened = v;
    }
  }
  read(root, "clients", c.clients, "config");
  if (root.contains("split")) c.split = parse_enum(root["split"].get<std::string>(), split_names, "config.split");
  if (root.contains("partition") && !root["partition"].is_null()) {
    std::vector<std::vector<std::size_t>> p;
    read(root, "partition", p, "config");
    c.partition = p;
  }
  if (root.contains("setup")) c.setup = parse_enum(root["setup"].get<std::string>(), setup_names, "config.setup");
  read(root, "isolated_client", c.isolated_client, "config");
  if (root.contains("aggregation"))
    c.aggregation = parse_enum(root["aggregation"].get<std::string>(), aggregation_names, "config.aggregation");
  read(root, "beta", c.beta, "config");
  if (root.contains("non_edges"))
    c.non_edges = parse_enum(root["non_edges"].get<std::string>(), non_edge_names, "config.non_edges");
  if (root.contains("path_beliefs"))
    c.path_beliefs = parse_enum(root["path_beliefs"].get<std::string>(), path_names, "config.path_beliefs");
  read(root, "rounds", c.rounds, "config");
  read(root, "early_stop", c.early_stop, "config");
  read(root, "early_stop_tol", c.early_stop_tol, "config");
  read(root, "shd_reversal_cost", c.shd_reversal_cost, "config");
  if (root.contains("lcdm")) c.lcdm = parse_lcdm(root["lcdm"], c.lcdm);
  read(root, "seeds", c.seeds, "config");
  read(root, "output_dir", c.output_dir, "config");
  read(root, "checkpoints", c.checkpoints, "config");
  return c;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  ExperimentConfig c;
  try {
    c = parse_config_document(json_text);
  } catch (const json::exception& e) {
    throw config_error(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw config_error("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

std::string to_json(const ExperimentConfig& c, int indent) {
  json root{
      {"graph", {{"type", c.graph.type}, {"n_nodes", c.graph.n_nodes}, {"er_n", c.graph.er_n}, {"name", c.graph.name},
                 {"permute", c.graph.permute}}},
      {"data", {{"n_obs", c.data.n_obs}, {"n_int", c.data.n_int}, {"n_categories", c.data.n_categories},
                {"intervened", c.data.intervened ? json(*c.data.intervened) : json(nullptr)},
                {"mechanism_gain", c.data.mechanism_gain}}},
      {"clients", c.clients},
      {"split", enum_name(c.split, split_names)},
      {"partition", c.partition ? json(*c.partition) : json(nullptr)},
      {"setup", enum_name(c.setup, setup_names)},
      {"isolated_client", c.isolated_client},
      {"aggregation", enum_name(c.aggregation, aggregation_names)},
      {"beta", c.beta},
      {"non_edges", enum_name(c.non_edges, non_edge_names)},
      {"path_beliefs", enum_name(c.path_beliefs, path_names)},
      {"rounds", c.rounds},
      {"early_stop", c.early_stop},
      {"early_stop_tol", c.early_stop_tol},
      {"shd_reversal_cost", c.shd_reversal_cost},
      {"lcdm", lcdm_to_json(c.lcdm)},
      {"seeds", c.seeds},
      {"output_dir", c.output_dir},
      {"checkpoints", c.checkpoints}};
  return root.dump(indent);
}

bool same_config(const ExperimentConfig& a, const ExperimentConfig& b) { return to_json(a) == to_json(b); }

void ExperimentConfig::validate() const {
  std::vector<std::string> problems;
  static const std::set<std::string> graph_types{"er", "chain", "bidiag", "collider", "full", "jungle", "builtin"};
  if (!graph_types.count(graph.type)) problems.push_back("graph.type must be one of er|chain|bidiag|collider|full|jungle|builtin");
  if (graph.type == "builtin" && graph.name != "asia" && graph.name != "sachs" && graph.name != "alarm")
    problems.push_back("graph.name must be asia|sachs|alarm for builtin graphs");
  std::size_t n = graph.n_nodes;
  if (graph.type == "builtin" && problems.empty()) n = load_builtin(graph.name).n_nodes();
  if (graph.type != "builtin" && n < 2) problems.push_back("graph.n_nodes must be >= 2");
  if (graph.type == "jungle" && n < 3) problems.push_back("graph.n_nodes must be >= 3 for jungle");
  if (graph.type == "er") {
    const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n > 0 ? n - 1 : 0);
    if (!(graph.er_n >= 0.0) || (pairs > 0 && graph.er_n * static_cast<double>(n) / pairs > 1.0 + 1e-12))
      problems.push_back("graph.er_n must be >= 0 and imply an edge probability <= 1");
  }
  if (data.n_categories < 2 || data.n_categories > 255) problems.push_back("data.n_categories must be in [2, 255]");
  if (data.n_obs == 0) problems.push_back("data.n_obs must be >= 1");
  if (!(data.mechanism_gain > 0.0)) problems.push_back("data.mechanism_gain must be > 0");
  std::vector<std::size_t> targets;
  if (data.intervened) {
    targets = *data.intervened;
    std::set<std::size_t> uniq(targets.begin(), targets.end());
    if (uniq.size() != targets.size()) problems.push_back("data.intervened has duplicates");
    for (auto v : targets)
      if (v >= n) problems.push_back("data.intervened entry " + std::to_string(v) + " out of range");
  } else {
    for (std::size_t v = 0; v < n; ++v) targets.push_back(v);
  }
  if (clients == 0) problems.push_back("clients must be >= 1");
  if (clients > data.n_obs) problems.push_back("clients must not exceed data.n_obs");
  if (setup == Setup::isolated && isolated_client >= clients) problems.push_back("isolated_client must be < clients");
  if (partition) {
    if (split != SplitMode::vertical) problems.push_back("partition is only valid with split = vertical");
    if (partition->size() != clients) problems.push_back("partition must have one entry per client");
    std::set<std::size_t> seen;
    bool overlap = false;
    for (const auto& part : *partition)
      for (auto v : part) overlap |= !seen.insert(v).second;
    if (overlap) problems.push_back("partition sets must be disjoint");
    if (seen != std::set<std::size_t>(targets.begin(), targets.end()))
      problems.push_back("partition must cover exactly the intervened variables");
  } else if (split == SplitMode::vertical && targets.size() < clients) {
    problems.push_back("vertical split needs at least one intervened variable per client");
  }
  if (!(beta > 0.0)) problems.push_back("beta must be > 0");
  if (!(early_stop_tol > 0.0)) problems.push_back("early_stop_tol must be > 0");
  if (shd_reversal_cost != 1 && shd_reversal_cost != 2) problems.push_back("shd_reversal_cost must be 1 or 2");
  if (seeds.empty()) problems.push_back("seeds must not be empty");
  try {
    lcdm.validate();
  } catch (const Error& e) {
    problems.push_back(e.what());
  }
  if (!problems.empty()) {
    std::string msg = "invalid config:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw config_error(msg);
  }
}

}  // namespace fedcd
