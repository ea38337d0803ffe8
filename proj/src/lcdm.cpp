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
#include "fedcd/lcdm.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "fedcd/error.hpp"

namespace fedcd {

void LcdmConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw invalid_argument(std::string("lcdm config: ") + name + " must be > 0");
  };
  positive(lr_model, "lr_model");
  positive(lr_gamma, "lr_gamma");
  positive(lr_theta, "lr_theta");
  if (!(lambda_sparse >= 0.0) || !(lambda_prior >= 0.0)) throw invalid_argument("lcdm config: lambdas must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw invalid_argument("lcdm config: momentum must be in [0, 1)");
  if (!(mask_drop_prob >= 0.0 && mask_drop_prob <= 1.0)) throw invalid_argument("lcdm config: mask_drop_prob in [0, 1]");
  if (!(held_out_fraction >= 0.0 && held_out_fraction < 1.0))
    throw invalid_argument("lcdm config: held_out_fraction in [0, 1)");
  if (!(belief_clamp > 0.0 && belief_clamp < 0.5)) throw invalid_argument("lcdm config: belief_clamp in (0, 0.5)");
  if (!(dist_epochs >= 0.0) || !(initial_dist_epochs >= 0.0)) throw invalid_argument("lcdm config: epochs must be >= 0");
  if (batch_size == 0 || graph_batch_size == 0 || adjacency_samples == 0)
    throw invalid_argument("lcdm config: batch sizes and adjacency_samples must be >= 1");
  if (embedding_dim == 0 || hidden == 0) throw invalid_argument("lcdm config: model dimensions must be >= 1");
}

// ---------------------------------------------------------------------------
// GraphParams

GraphParams::GraphParams(std::size_t n_nodes) : n_(n_nodes), gamma_(n_nodes * n_nodes, 0.0), theta_(n_nodes * n_nodes, 0.0) {
  for (std::size_t i = 0; i < n_; ++i) gamma_[i * n_ + i] = no_self_edge;
}

void GraphParams::set_gamma(std::size_t i, std::size_t j, double v) {
  if (i == j) return;
  gamma_[i * n_ + j] = v;
}

void GraphParams::set_theta(std::size_t i, std::size_t j, double v) {
  if (i == j) return;
  theta_[i * n_ + j] = v;
  theta_[j * n_ + i] = -v;
}

double GraphParams::edge_prob(std::size_t i, std::size_t j) const {
  if (i == j) return 0.0;
  return sigmoid(gamma(i, j)) * sigmoid(theta(i, j));
}

BeliefMatrix GraphParams::beliefs() const {
  std::vector<double> psi(n_ * n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) psi[i * n_ + j] = edge_prob(i, j);
  return BeliefMatrix(n_, std::move(psi));
}

GraphParams init_from_belief(const BeliefMatrix& psi, const LcdmConfig& cfg, Rng* rng) {
  const std::size_t n = psi.n_nodes();
  GraphParams p(n);
  const double eps = cfg.belief_clamp;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (cfg.init == BeliefInit::stochastic) {
        if (rng == nullptr) throw invalid_argument("init_from_belief: stochastic variant needs an rng");
        p.set_gamma(i, j, rng->bernoulli(psi(i, j)) ? cfg.stochastic_init_logit : -cfg.stochastic_init_logit);
      } else {
        const double q = std::clamp(psi(i, j), eps, 1.0 - eps);
        p.set_gamma(i, j, std::log(q / (1.0 - q)));
      }
    }
  return p;
}

// ---------------------------------------------------------------------------
// Regularizers

namespace {

double clamped(double v, double eps) { return std::clamp(v, eps, 1.0 - eps); }

// Shared chain rule: given dR/dq_ij for every ordered pair, produce
// derivatives w.r.t. gamma_ij and the free antisymmetric theta_ij.
GraphGradient chain_through_probs(const GraphParams& p, const std::vector<double>& dq) {
  const std::size_t n = p.n_nodes();
  GraphGradient g{std::vector<double>(n * n, 0.0), std::vector<double>(n * n, 0.0)};
  std::vector<double> dtheta_partial(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double sg = sigmoid(p.gamma(i, j)), st = sigmoid(p.theta(i, j));
      g.gamma[i * n + j] = dq[i * n + j] * sg * (1.0 - sg) * st;
      dtheta_partial[i * n + j] = dq[i * n + j] * sg * st * (1.0 - st);
    }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) g.theta[i * n + j] = dtheta_partial[i * n + j] - dtheta_partial[j * n + i];
  return g;
}

}  // namespace

double sparsity_value(const GraphParams& p, double lambda_sparse) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.n_nodes(); ++i)
    for (std::size_t j = 0; j < p.n_nodes(); ++j) total += p.edge_prob(i, j);
  return lambda_sparse * total;
}

GraphGradient sparsity_gradient(const GraphParams& p, double lambda_sparse) {
  const std::size_t n = p.n_nodes();
  std::vector<double> dq(n * n, lambda_sparse);
  return chain_through_probs(p, dq);
}

double prior_value(const GraphParams& p, const BeliefMatrix& prior, double lambda_prior, double clamp) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.n_nodes(); ++i)
    for (std::size_t j = 0; j < p.n_nodes(); ++j) {
      if (i == j) continue;
      const double q = p.edge_prob(i, j), psi = clamped(prior(i, j), clamp);
      total -= q * std::log(psi) + (1.0 - q) * std::log(1.0 - psi);
    }
  return lambda_prior * total;
}

GraphGradient prior_gradient(const GraphParams& p, const BeliefMatrix& prior, double lambda_prior, double clamp) {
  const std::size_t n = p.n_nodes();
  std::vector<double> dq(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double psi = clamped(prior(i, j), clamp);
      dq[i * n + j] = lambda_prior * std::log((1.0 - psi) / psi);
    }
  return chain_through_probs(p, dq);
}

// ---------------------------------------------------------------------------
// Node models

NodeModels::NodeModels(std::size_t n_nodes, std::size_t n_categories, const LcdmConfig& cfg, Rng& rng) {
  for (std::size_t i = 0; i < n_nodes; ++i) {
    CategoricalMlp m({n_nodes, n_categories, cfg.embedding_dim, cfg.hidden});
    m.initialize(rng);
    models_.push_back(std::move(m));
  }
}

double NodeModels::nll(std::size_t node, std::span<const std::uint8_t> row, std::span<const std::uint8_t> mask) const {
  std::vector<std::size_t> active;
  for (std::size_t v = 0; v < row.size(); ++v)
    if (v != node && mask[v]) active.push_back(v);
  std::vector<double> logp(models_[node].shape().n_categories);
  models_[node].log_probs(row, active, logp);
  return -logp[row[node]];
}

std::vector<std::vector<double>> input_tables(const NodeModels& models) {
  std::vector<std::vector<double>> tables;
  for (std::size_t i = 0; i < models.n_nodes(); ++i) tables.push_back(models.model(i).input_table());
  return tables;
}

namespace {

void prepare_holdout(const Table& obs, const LcdmConfig& cfg, LcdmState& state) {
  if (state.holdout_source_rows == obs.n_rows() && !state.train_rows.empty()) return;
  std::vector<std::size_t> order(obs.n_rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  state.rng.shuffle(order);
  std::size_t held = static_cast<std::size_t>(std::floor(cfg.held_out_fraction * static_cast<double>(order.size())));
  if (held >= order.size()) held = 0;
  state.held_out_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(held));
  state.train_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(held), order.end());
  state.holdout_source_rows = obs.n_rows();
}

// Mean NLL over nodes and held-out rows, with dropout masks drawn from a
// fixed stream so successive evaluations are comparable.
double held_out_nll(const NodeModels& models, const Table& obs, const LcdmConfig& cfg,
                    const std::vector<std::size_t>& rows) {
  if (rows.empty()) return 0.0;
  Rng mask_rng(derive_seed(cfg.seed, {0x4e4c4cULL}));
  const std::size_t n = models.n_nodes();
  std::vector<std::size_t> active;
  std::vector<double> logp(models.model(0).shape().n_categories);
  double total = 0.0;
  for (std::size_t r : rows) {
    auto row = obs.row(r);
    for (std::size_t j = 0; j < n; ++j) {
      active.clear();
      for (std::size_t v = 0; v < n; ++v)
        if (v != j && !mask_rng.bernoulli(cfg.mask_drop_prob)) active.push_back(v);
      models.model(j).log_probs(row, active, logp);
      total -= logp[row[j]];
    }
  }
  return total / static_cast<double>(rows.size() * n);
}

}  // namespace

DistributionTrace distribution_fitting(NodeModels& models, const Table& obs, const LcdmConfig& cfg, double epochs,
                                       LcdmState& state) {
  if (obs.n_rows() == 0)
    throw runtime_error("distribution fitting: no observational data, client cannot participate this round");
  prepare_holdout(obs, cfg, state);

  const std::size_t n = models.n_nodes();
  std::size_t total_params = 0;
  for (std::size_t j = 0; j < n; ++j) total_params += models.model(j).num_params();
  if (state.model_velocity.size() != total_params) state.model_velocity.assign(total_params, 0.0);

  DistributionTrace trace;
  trace.held_out_nll.push_back(held_out_nll(models, obs, cfg, state.held_out_rows));

  std::vector<std::size_t> order = state.train_rows;
  const std::size_t steps_per_epoch =
      std::max<std::size_t>({1, cfg.min_dist_steps, (order.size() + cfg.batch_size - 1) / cfg.batch_size});
  const auto total_steps = static_cast<std::size_t>(std::ceil(epochs * static_cast<double>(steps_per_epoch)));

  std::vector<std::vector<double>> grads(n);
  for (std::size_t j = 0; j < n; ++j) grads[j].assign(models.model(j).num_params(), 0.0);
  std::vector<std::size_t> active;
  std::size_t cursor = order.size();
  for (std::size_t step = 0; step < total_steps; ++step) {
    for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0);
    std::size_t batch = 0;
    for (; batch < cfg.batch_size; ++batch) {
      if (cursor >= order.size()) {
        state.rng.shuffle(order);
        cursor = 0;
      }
      auto row = obs.row(order[cursor++]);
      for (std::size_t j = 0; j < n; ++j) {
        active.clear();
        for (std::size_t v = 0; v < n; ++v)
          if (v != j && !state.rng.bernoulli(cfg.mask_drop_prob)) active.push_back(v);
        models.model(j).accumulate_nll_gradient(row, active, row[j], grads[j]);
      }
    }
    // SGD with momentum on the batch-mean gradient.
    std::size_t offset = 0;
    const double scale = 1.0 / static_cast<double>(batch);
    for (std::size_t j = 0; j < n; ++j) {
      auto params = models.model(j).params();
      for (std::size_t k = 0; k < params.size(); ++k) {
        double& vel = state.model_velocity[offset + k];
        vel = cfg.momentum * vel + grads[j][k] * scale;
        params[k] -= cfg.lr_model * vel;
      }
      offset += params.size();
    }
    if ((step + 1) % steps_per_epoch == 0 || step + 1 == total_steps)
      trace.held_out_nll.push_back(held_out_nll(models, obs, cfg, state.held_out_rows));
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Graph fitting

namespace {

constexpr double adam_eps = 1e-8;

void adam_update(double& param, double grad, double& m, double& v, std::size_t& t, double lr, double beta1,
                 double beta2) {
  ++t;
  m = beta1 * m + (1.0 - beta1) * grad;
  v = beta2 * v + (1.0 - beta2) * grad * grad;
  const double m_hat = m / (1.0 - std::pow(beta1, static_cast<double>(t)));
  const double v_hat = v / (1.0 - std::pow(beta2, static_cast<double>(t)));
  param -= lr * m_hat / (std::sqrt(v_hat) + adam_eps);
}

void ensure_optimizer_state(std::size_t n, LcdmState& state) {
  if (state.gamma_m.size() == n * n) return;
  state.gamma_m.assign(n * n, 0.0);
  state.gamma_v.assign(n * n, 0.0);
  state.theta_m.assign(n * n, 0.0);
  state.theta_v.assign(n * n, 0.0);
  state.gamma_t.assign(n * n, 0);
  state.theta_t.assign(n * n, 0);
}

void reset_optimizer_state(LcdmState& state) {
  state.gamma_m.clear();
  state.gamma_v.clear();
  state.theta_m.clear();
  state.theta_v.clear();
  state.gamma_t.clear();
  state.theta_t.clear();
}

}  // namespace

GraphStepInfo graph_fitting_step(GraphParams& params, const NodeModels& models,
                                 const std::vector<std::vector<double>>& tables, const Dataset& local,
                                 const BeliefMatrix& prior, const LcdmConfig& cfg, LcdmState& state) {
  const std::size_t n = params.n_nodes();
  if (prior.n_nodes() != n || models.n_nodes() != n) throw invalid_argument("graph_fitting_step: dimension mismatch");
  ensure_optimizer_state(n, state);
  Rng& rng = state.rng;
  GraphStepInfo info;

  std::vector<double> gamma_grad(n * n, 0.0), theta_grad(n * n, 0.0);
  std::vector<std::uint8_t> update_theta(n * n, 0);

  const std::size_t m_samples = cfg.adjacency_samples;
  std::vector<std::uint8_t> samples;  // [m][i][j]
  const auto targets = local.intervened();
  if (!targets.empty()) {
    // Intervention target and minibatch.
    const std::size_t target = targets[rng.below(targets.size())];
    info.target = target;
    const Table& table = local.interventional.at(target);
    std::vector<std::size_t> batch(cfg.graph_batch_size);
    for (auto& r : batch) r = rng.below(table.n_rows());

    // Adjacency samples; the intervened variable has no incoming edges.
    samples.assign(m_samples * n * n, 0);
    for (std::size_t s = 0; s < m_samples; ++s)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          if (i != j && j != target && rng.bernoulli(params.edge_prob(i, j))) samples[(s * n + i) * n + j] = 1;

    // Batch-mean NLL of every non-intervened node under every sample. A
    // node's NLL only depends on its parent column, and columns repeat once
    // edge probabilities saturate, so results are memoized per column.
    std::vector<double> nll(m_samples * n, 0.0);
    std::vector<std::uint8_t> mask(n);
    std::map<std::vector<std::uint8_t>, double> memo;
    double nll_total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == target) continue;
      memo.clear();
      for (std::size_t s = 0; s < m_samples; ++s) {
        for (std::size_t i = 0; i < n; ++i) mask[i] = samples[(s * n + i) * n + j];
        auto [it, inserted] = memo.try_emplace(mask, 0.0);
        if (inserted) {
          double acc = 0.0;
          for (std::size_t r : batch) {
            auto row = table.row(r);
            acc += models.model(j).nll_with_table(tables[j], row, mask, row[j]);
          }
          it->second = acc / static_cast<double>(batch.size());
        }
        nll[s * n + j] = it->second;
        nll_total += it->second;
      }
    }
    info.mean_nll = nll_total / static_cast<double>(m_samples * (n - 1));

    // Contrast of the child's NLL with the edge on versus off.
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j || j == target) continue;
        double pos = 0.0, neg = 0.0;
        std::size_t n_pos = 0;
        for (std::size_t s = 0; s < m_samples; ++s) {
          if (samples[(s * n + i) * n + j]) {
            pos += nll[s * n + j];
            ++n_pos;
          } else {
            neg += nll[s * n + j];
          }
        }
        const std::size_t n_neg = m_samples - n_pos;
        if (n_pos == 0 || n_neg == 0) continue;
        const double diff = pos / static_cast<double>(n_pos) - neg / static_cast<double>(n_neg);
        const double sg = sigmoid(params.gamma(i, j)), st = sigmoid(params.theta(i, j));
        gamma_grad[i * n + j] += sg * (1.0 - sg) * st * diff;
        if (i == target) {
          // Orientation evidence only from interventions on the edge's source.
          const double g = st * (1.0 - st) * sg * diff;
          theta_grad[i * n + j] += g;
          theta_grad[j * n + i] -= g;
        }
      }
    for (std::size_t v = 0; v < n; ++v)
      if (v != target) {
        update_theta[target * n + v] = 1;
        update_theta[v * n + target] = 1;
      }
  }

  // Sparsity acts on gamma only.
  const auto sparse = sparsity_gradient(params, cfg.lambda_sparse);
  for (std::size_t k = 0; k < n * n; ++k) gamma_grad[k] += sparse.gamma[k];

  if (cfg.lambda_prior > 0.0) {
    GraphGradient prior_g;
    if (cfg.prior_gradient == PriorGradient::score_function && !samples.empty()) {
      // REINFORCE on the sampled adjacencies, per edge.
      std::vector<double> dq(n * n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          if (i == j) continue;
          const double q = params.edge_prob(i, j);
          const double psi = clamped(prior(i, j), cfg.belief_clamp);
          if (q <= 0.0 || q >= 1.0) continue;
          double acc = 0.0;
          for (std::size_t s = 0; s < m_samples; ++s) {
            const double z = samples[(s * n + i) * n + j];
            const double loss = -(z * std::log(psi) + (1.0 - z) * std::log(1.0 - psi));
            acc += loss * (z - q) / (q * (1.0 - q));
          }
          dq[i * n + j] = cfg.lambda_prior * acc / static_cast<double>(m_samples);
        }
      prior_g = chain_through_probs(params, dq);
    } else {
      prior_g = prior_gradient(params, prior, cfg.lambda_prior, cfg.belief_clamp);
    }
    for (std::size_t k = 0; k < n * n; ++k) {
      gamma_grad[k] += prior_g.gamma[k];
      theta_grad[k] += prior_g.theta[k];
      if (prior_g.theta[k] != 0.0) update_theta[k] = 1;
    }
  }

  for (std::size_t k = 0; k < n * n; ++k)
    if (!std::isfinite(gamma_grad[k]) || !std::isfinite(theta_grad[k]))
      throw runtime_error("graph fitting: non-finite gradient at entry (" + std::to_string(k / n) + ", " +
                          std::to_string(k % n) + ")");

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const std::size_t k = i * n + j;
      double g = params.gamma(i, j);
      adam_update(g, gamma_grad[k], state.gamma_m[k], state.gamma_v[k], state.gamma_t[k], cfg.lr_gamma, 0.9, 0.9);
      params.set_gamma(i, j, g);
      if (i < j && (update_theta[k] || update_theta[j * n + i])) {
        double t = params.theta(i, j);
        adam_update(t, theta_grad[k], state.theta_m[k], state.theta_v[k], state.theta_t[k], cfg.lr_theta, 0.9, 0.999);
        params.set_theta(i, j, t);
      }
    }
  return info;
}

// ---------------------------------------------------------------------------
// Driver

LcdmResult run_lcdm(const Dataset& local, const BeliefMatrix& prior, const LcdmConfig& cfg, LcdmState& state) {
  cfg.validate();
  local.validate();
  if (prior.n_nodes() != local.n_nodes) throw invalid_argument("run_lcdm: prior and dataset sizes differ");
  if (local.observational.n_rows() == 0)
    throw runtime_error("run_lcdm: no observational data, client cannot participate this round");

  const bool first_fit = !(cfg.warm_start_models && state.models);
  if (first_fit) {
    state.models.emplace(local.n_nodes, local.n_categories, cfg, state.rng);
    state.model_velocity.clear();
  }
  NodeModels& models = *state.models;

  GraphParams params = (cfg.warm_start_graph && state.graph) ? *state.graph : init_from_belief(prior, cfg, &state.rng);
  if (!cfg.warm_start_graph) reset_optimizer_state(state);

  LcdmResult result;
  const std::size_t int_rows = local.interventional_rows();
  const std::size_t steps_per_epoch =
      std::max(cfg.min_graph_steps, (int_rows + cfg.graph_batch_size - 1) / cfg.graph_batch_size);
  for (std::size_t a = 0; a < cfg.alternations; ++a) {
    const double epochs = cfg.dist_epochs + ((first_fit && a == 0) ? cfg.initial_dist_epochs : 0.0);
    auto trace = distribution_fitting(models, local.observational, cfg, epochs, state);
    result.dist_trace.insert(result.dist_trace.end(), trace.held_out_nll.begin() + 1, trace.held_out_nll.end());

    const auto tables = input_tables(models);
    for (std::size_t s = 0; s < cfg.graph_epochs * steps_per_epoch; ++s) {
      auto info = graph_fitting_step(params, models, tables, local, prior, cfg, state);
      result.graph_trace.push_back(info.mean_nll);
    }
  }
  state.graph = params;
  result.psi = params.beliefs();
  result.params = std::move(params);
  return result;
}

LcdmResult run_lcdm(const Dataset& local, const BeliefMatrix& prior, const LcdmConfig& cfg) {
  LcdmState state(cfg.seed);
  return run_lcdm(local, prior, cfg, state);
}

void write_graph_params_csv(std::ostream& os, const GraphParams& p) {
  std::ostringstream out;
  out << std::setprecision(17) << "i,j,gamma,theta\n";
  for (std::size_t i = 0; i < p.n_nodes(); ++i)
    for (std::size_t j = 0; j < p.n_nodes(); ++j)
      if (i != j) out << i << ',' << j << ',' << p.gamma(i, j) << ',' << p.theta(i, j) << '\n';
  os << out.str();
}

void write_model_weights_csv(std::ostream& os, const NodeModels& models) {
  std::ostringstream out;
  out << std::setprecision(17) << "node,index,value\n";
  for (std::size_t j = 0; j < models.n_nodes(); ++j) {
    auto params = models.model(j).params();
    for (std::size_t k = 0; k < params.size(); ++k) out << j << ',' << k << ',' << params[k] << '\n';
  }
  os << out.str();
}

void write_trace_csv(std::ostream& os, const std::vector<double>& trace, const char* column) {
  std::ostringstream out;
  out << std::setprecision(17) << "step," << column << '\n';
  for (std::size_t k = 0; k < trace.size(); ++k) out << k << ',' << trace[k] << '\n';
  os << out.str();
}

}  // namespace fedcd
