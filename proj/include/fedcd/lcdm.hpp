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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "fedcd/datagen.hpp"
#include "fedcd/graph.hpp"
#include "fedcd/mlp.hpp"
#include "fedcd/rng.hpp"

namespace fedcd {

enum class BeliefInit { deterministic, stochastic };
enum class PriorGradient { expected, score_function };

struct LcdmConfig {
  std::size_t alternations = 2;       // distribution/graph fitting cycles per call
  double initial_dist_epochs = 4.0;  // extra epochs the first time a client's models are fitted
  double dist_epochs = 1.0;          // fractional epochs allowed
  std::size_t graph_epochs = 1;
  std::size_t min_graph_steps = 25;   // lower bound on graph fitting steps per epoch
  std::size_t min_dist_steps = 40;    // lower bound on distribution fitting steps per epoch
  std::size_t batch_size = 64;        // distribution fitting minibatch
  std::size_t graph_batch_size = 64;  // interventional minibatch per graph step
  std::size_t adjacency_samples = 20;
  double lr_model = 5e-3;
  double momentum = 0.9;
  double lr_gamma = 2e-2;
  double lr_theta = 1e-1;
  double lambda_sparse = 0.004;
  double lambda_prior = 0.01;
  double mask_drop_prob = 0.5;
  double held_out_fraction = 0.1;
  double belief_clamp = 1e-4;
  BeliefInit init = BeliefInit::deterministic;
  double stochastic_init_logit = 3.0;
  PriorGradient prior_gradient = PriorGradient::expected;
  bool warm_start_graph = false;
  bool warm_start_models = true;
  std::size_t embedding_dim = 16;
  std::size_t hidden = 48;
  std::uint64_t seed = 0;

  void validate() const;
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Edge-existence logits gamma and orientation logits theta. theta is kept
/// antisymmetric; the diagonal of gamma is pinned to a large negative value.
class GraphParams {
 public:
  static constexpr double no_self_edge = -1e9;

  GraphParams() = default;
  explicit GraphParams(std::size_t n_nodes);

  std::size_t n_nodes() const noexcept { return n_; }
  double gamma(std::size_t i, std::size_t j) const { return gamma_[i * n_ + j]; }
  double theta(std::size_t i, std::size_t j) const { return theta_[i * n_ + j]; }
  void set_gamma(std::size_t i, std::size_t j, double v);
  /// Sets theta_ij and theta_ji = -v.
  void set_theta(std::size_t i, std::size_t j, double v);

  /// sigma(gamma_ij) * sigma(theta_ij); zero on the diagonal.
  double edge_prob(std::size_t i, std::size_t j) const;
  BeliefMatrix beliefs() const;

  const std::vector<double>& gamma_values() const noexcept { return gamma_; }
  const std::vector<double>& theta_values() const noexcept { return theta_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> gamma_;
  std::vector<double> theta_;
};

/// gamma_ij = logit(clamp(psi_ij)), theta = 0; or, in the stochastic variant,
/// gamma_ij = +/-c from a Bernoulli(psi_ij) draw.
GraphParams init_from_belief(const BeliefMatrix& psi, const LcdmConfig& cfg, Rng* rng = nullptr);

struct GraphGradient {
  std::vector<double> gamma;  // N*N
  std::vector<double> theta;  // N*N, antisymmetric (derivative w.r.t. the free theta_ij)
};

/// lambda_sparse * sum sigma(gamma)sigma(theta).
double sparsity_value(const GraphParams& p, double lambda_sparse);
GraphGradient sparsity_gradient(const GraphParams& p, double lambda_sparse);

/// lambda_prior * sum -[q log psi + (1-q) log(1-psi)] with q = sigma(gamma)sigma(theta),
/// i.e. the prior log-loss evaluated at the expected adjacency.
double prior_value(const GraphParams& p, const BeliefMatrix& prior, double lambda_prior, double clamp);
GraphGradient prior_gradient(const GraphParams& p, const BeliefMatrix& prior, double lambda_prior, double clamp);

/// Per-node conditional models f_i(X_i | masked X_-i).
class NodeModels {
 public:
  NodeModels() = default;
  NodeModels(std::size_t n_nodes, std::size_t n_categories, const LcdmConfig& cfg, Rng& rng);

  std::size_t n_nodes() const noexcept { return models_.size(); }
  CategoricalMlp& model(std::size_t i) { return models_[i]; }
  const CategoricalMlp& model(std::size_t i) const { return models_[i]; }

  /// -log f_i(x_i; mask (.) x_-i); mask[i] is ignored.
  double nll(std::size_t node, std::span<const std::uint8_t> row, std::span<const std::uint8_t> mask) const;

 private:
  std::vector<CategoricalMlp> models_;
};

struct DistributionTrace {
  std::vector<double> held_out_nll;  // entry 0 is before training, then one per epoch
};

/// Mutable per-client training state carried across calls.
struct LcdmState {
  explicit LcdmState(std::uint64_t seed) : rng(seed) {}

  Rng rng;
  std::optional<NodeModels> models;
  std::vector<double> model_velocity;
  std::optional<GraphParams> graph;
  std::vector<std::size_t> train_rows, held_out_rows;
  std::size_t holdout_source_rows = 0;

  // Adam moments for gamma and theta.
  std::vector<double> gamma_m, gamma_v, theta_m, theta_v;
  std::vector<std::size_t> gamma_t, theta_t;
};

/// Trains the node models on observational rows with random input dropout.
/// Throws Error(runtime) when `obs` is empty: the client cannot participate.
DistributionTrace distribution_fitting(NodeModels& models, const Table& obs, const LcdmConfig& cfg,
                                       double epochs, LcdmState& state);

struct GraphStepInfo {
  std::optional<std::size_t> target;  // intervened variable of the minibatch, if any
  double mean_nll = 0.0;
};

/// One optimization step of the graph fitting objective with the prior
/// regularizer. Data-term gradients use the edge-on / edge-off contrast
/// estimator over sampled adjacency matrices; regularizer gradients are exact.
GraphStepInfo graph_fitting_step(GraphParams& params, const NodeModels& models,
                                 const std::vector<std::vector<double>>& input_tables, const Dataset& local,
                                 const BeliefMatrix& prior, const LcdmConfig& cfg, LcdmState& state);

/// Precomputed first-layer tables of every node model (see CategoricalMlp::input_table).
std::vector<std::vector<double>> input_tables(const NodeModels& models);

struct LcdmResult {
  BeliefMatrix psi;
  GraphParams params;
  std::vector<double> dist_trace;   // held-out NLL after each distribution epoch
  std::vector<double> graph_trace;  // mean interventional NLL per graph step
};

/// Alternates distribution fitting and graph fitting; returns the client's
/// belief sigma(gamma)sigma(theta).
LcdmResult run_lcdm(const Dataset& local, const BeliefMatrix& prior, const LcdmConfig& cfg, LcdmState& state);
LcdmResult run_lcdm(const Dataset& local, const BeliefMatrix& prior, const LcdmConfig& cfg);

// Checkpoint dumps (CSV).
void write_graph_params_csv(std::ostream& os, const GraphParams& p);
void write_model_weights_csv(std::ostream& os, const NodeModels& models);
void write_trace_csv(std::ostream& os, const std::vector<double>& trace, const char* column);

}  // namespace fedcd
