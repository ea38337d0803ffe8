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
#include "fedcd/mlp.hpp"

#include <algorithm>
#include <cmath>

namespace fedcd {

namespace {

double log_sum_exp(std::span<const double> x) {
  const double m = *std::max_element(x.begin(), x.end());
  double s = 0.0;
  for (double v : x) s += std::exp(v - m);
  return m + std::log(s);
}

}  // namespace

CategoricalMlp::CategoricalMlp(const MlpShape& shape) : shape_(shape) {
  params_.assign(b2_offset() + shape_.n_categories, 0.0);
}

void CategoricalMlp::initialize(Rng& rng, double gain) {
  const std::size_t in_dim = shape_.n_inputs * shape_.embedding_dim;
  const double emb_bound = std::sqrt(3.0);
  const double w1_bound = gain * std::sqrt(6.0 / static_cast<double>(in_dim + shape_.hidden));
  const double w2_bound = gain * std::sqrt(6.0 / static_cast<double>(shape_.hidden + shape_.n_categories));

  auto fill = [&](std::size_t from, std::size_t to, double bound) {
    for (std::size_t k = from; k < to; ++k) params_[k] = rng.uniform(-bound, bound);
  };
  fill(0, w1_offset(), emb_bound);
  fill(w1_offset(), b1_offset(), w1_bound);
  fill(b1_offset(), w2_offset(), w1_bound);
  fill(w2_offset(), b2_offset(), w2_bound);
  fill(b2_offset(), params_.size(), w2_bound);
}

// W1 is stored input-major ([input_dim][hidden]) so that every inner loop
// runs over contiguous hidden units.

void CategoricalMlp::hidden_pre(std::span<const std::uint8_t> values, std::span<const std::size_t> active,
                                std::span<double> pre) const {
  const std::size_t hidden = shape_.hidden;
  const std::size_t emb = shape_.embedding_dim;
  const double* w1 = params_.data() + w1_offset();
  const double* b1 = params_.data() + b1_offset();
  double* out = pre.data();
  std::copy(b1, b1 + hidden, out);
  for (std::size_t v : active) {
    const double* e = params_.data() + emb_offset(v, values[v]);
    for (std::size_t k = 0; k < emb; ++k) {
      const double ek = e[k];
      const double* w = w1 + (v * emb + k) * hidden;
      for (std::size_t h = 0; h < hidden; ++h) out[h] += ek * w[h];
    }
  }
}

void CategoricalMlp::output_log_probs(std::span<const double> pre, std::span<double> act,
                                      std::span<double> out) const {
  const std::size_t hidden = shape_.hidden;
  for (std::size_t h = 0; h < hidden; ++h) act[h] = pre[h] > 0.0 ? pre[h] : leaky_slope * pre[h];
  const double* w2 = params_.data() + w2_offset();
  const double* b2 = params_.data() + b2_offset();
  for (std::size_t c = 0; c < shape_.n_categories; ++c) {
    double acc = b2[c];
    const double* row = w2 + c * hidden;
    for (std::size_t h = 0; h < hidden; ++h) acc += row[h] * act[h];
    out[c] = acc;
  }
  const double lse = log_sum_exp(out);
  for (double& v : out) v -= lse;
}

void CategoricalMlp::log_probs(std::span<const std::uint8_t> values, std::span<const std::size_t> active,
                               std::span<double> out) const {
  Scratch s(shape_);
  hidden_pre(values, active, s.pre());
  output_log_probs(s.pre(), s.act(), out);
}

double CategoricalMlp::accumulate_nll_gradient(std::span<const std::uint8_t> values,
                                               std::span<const std::size_t> active, std::size_t target,
                                               std::span<double> grad) const {
  const std::size_t hidden = shape_.hidden;
  const std::size_t n_cat = shape_.n_categories;
  const std::size_t emb = shape_.embedding_dim;

  Scratch s(shape_);
  auto pre = s.pre(), act = s.act(), logp = s.out(), dpre = s.dpre();
  hidden_pre(values, active, pre);
  output_log_probs(pre, act, logp);

  const double* w2 = params_.data() + w2_offset();
  double* gw2 = grad.data() + w2_offset();
  double* gb2 = grad.data() + b2_offset();
  std::fill(dpre.begin(), dpre.end(), 0.0);
  for (std::size_t c = 0; c < n_cat; ++c) {
    // d(-log softmax_y)/d(logit_c) = softmax_c - [c == y]
    const double dlogit = std::exp(logp[c]) - (c == target ? 1.0 : 0.0);
    gb2[c] += dlogit;
    const double* w = w2 + c * hidden;
    double* gw = gw2 + c * hidden;
    for (std::size_t h = 0; h < hidden; ++h) {
      gw[h] += dlogit * act[h];
      dpre[h] += dlogit * w[h];
    }
  }
  for (std::size_t h = 0; h < hidden; ++h) dpre[h] *= pre[h] > 0.0 ? 1.0 : leaky_slope;

  const double* w1 = params_.data() + w1_offset();
  double* gw1 = grad.data() + w1_offset();
  double* gb1 = grad.data() + b1_offset();
  for (std::size_t h = 0; h < hidden; ++h) gb1[h] += dpre[h];
  for (std::size_t v : active) {
    const std::size_t eo = emb_offset(v, values[v]);
    const double* e = params_.data() + eo;
    double* ge = grad.data() + eo;
    for (std::size_t k = 0; k < emb; ++k) {
      const double ek = e[k];
      const double* w = w1 + (v * emb + k) * hidden;
      double* gw = gw1 + (v * emb + k) * hidden;
      double acc = 0.0;
      for (std::size_t h = 0; h < hidden; ++h) {
        gw[h] += ek * dpre[h];
        acc += w[h] * dpre[h];
      }
      ge[k] += acc;
    }
  }
  return -logp[target];
}

std::vector<double> CategoricalMlp::input_table() const {
  const std::size_t hidden = shape_.hidden;
  const std::size_t emb = shape_.embedding_dim;
  const double* w1 = params_.data() + w1_offset();
  std::vector<double> table(shape_.n_inputs * shape_.n_categories * hidden, 0.0);
  for (std::size_t v = 0; v < shape_.n_inputs; ++v)
    for (std::size_t c = 0; c < shape_.n_categories; ++c) {
      const double* e = params_.data() + emb_offset(v, c);
      double* out = table.data() + (v * shape_.n_categories + c) * hidden;
      for (std::size_t k = 0; k < emb; ++k) {
        const double* w = w1 + (v * emb + k) * hidden;
        for (std::size_t h = 0; h < hidden; ++h) out[h] += e[k] * w[h];
      }
    }
  return table;
}

double CategoricalMlp::nll_with_table(std::span<const double> table, std::span<const std::uint8_t> values,
                                      std::span<const std::uint8_t> mask, std::size_t target) const {
  const std::size_t hidden = shape_.hidden;
  Scratch s(shape_);
  auto pre = s.pre();
  const double* b1 = params_.data() + b1_offset();
  std::copy(b1, b1 + hidden, pre.begin());
  for (std::size_t v = 0; v < shape_.n_inputs; ++v) {
    if (!mask[v]) continue;
    const double* t = table.data() + (v * shape_.n_categories + values[v]) * hidden;
    for (std::size_t h = 0; h < hidden; ++h) pre[h] += t[h];
  }
  auto out = s.out();
  output_log_probs(pre, s.act(), out);
  return -out[target];
}

}  // namespace fedcd
