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
#include <span>
#include <vector>

#include "fedcd/rng.hpp"

namespace fedcd {

struct MlpShape {
  std::size_t n_inputs = 0;     // categorical input variables
  std::size_t n_categories = 10;  // shared by inputs and output
  std::size_t embedding_dim = 16;
  std::size_t hidden = 48;
};

/// Categorical conditional model: one embedding table per input variable,
/// embeddings of the active inputs concatenated (inactive ones zeroed), then
/// Linear -> LeakyReLU -> Linear -> softmax.
///
/// Parameters live in one flat vector so optimizers and finite-difference
/// checks can treat the model as a point in R^P.
class CategoricalMlp {
 public:
  static constexpr double leaky_slope = 0.1;

  CategoricalMlp() = default;
  explicit CategoricalMlp(const MlpShape& shape);

  /// Glorot-uniform weights and biases, unit-variance uniform embeddings.
  /// `gain` multiplies the weight bounds of both linear layers.
  void initialize(Rng& rng, double gain = 1.0);

  const MlpShape& shape() const noexcept { return shape_; }
  std::size_t num_params() const noexcept { return params_.size(); }
  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }

  /// Log-probabilities over output categories. `values` holds one category
  /// per input; only inputs listed in `active` contribute.
  void log_probs(std::span<const std::uint8_t> values, std::span<const std::size_t> active,
                 std::span<double> out) const;

  /// Adds d(-log p(target))/d(params) to `grad` and returns -log p(target).
  double accumulate_nll_gradient(std::span<const std::uint8_t> values, std::span<const std::size_t> active,
                                 std::size_t target, std::span<double> grad) const;

  /// Per-input first-layer contributions W1_v * E_v[c], laid out
  /// [input][category][hidden]. Valid until the parameters change.
  std::vector<double> input_table() const;

  /// -log p(target) using a table from input_table(); active inputs are those
  /// with mask[v] != 0.
  double nll_with_table(std::span<const double> table, std::span<const std::uint8_t> values,
                        std::span<const std::uint8_t> mask, std::size_t target) const;

 private:
  std::size_t emb_offset(std::size_t v, std::size_t c) const {
    return (v * shape_.n_categories + c) * shape_.embedding_dim;
  }
  std::size_t w1_offset() const { return shape_.n_inputs * shape_.n_categories * shape_.embedding_dim; }
  std::size_t b1_offset() const { return w1_offset() + shape_.hidden * shape_.n_inputs * shape_.embedding_dim; }
  std::size_t w2_offset() const { return b1_offset() + shape_.hidden; }
  std::size_t b2_offset() const { return w2_offset() + shape_.n_categories * shape_.hidden; }

  // Working buffers for one forward/backward pass; on the stack for the
  // usual sizes.
  class Scratch {
   public:
    explicit Scratch(const MlpShape& shape) : hidden_(shape.hidden), n_cat_(shape.n_categories) {
      const std::size_t need = 3 * hidden_ + n_cat_;
      if (need > kInline) {
        heap_.resize(need);
        base_ = heap_.data();
      }
    }
    std::span<double> pre() { return {base_, hidden_}; }
    std::span<double> act() { return {base_ + hidden_, hidden_}; }
    std::span<double> dpre() { return {base_ + 2 * hidden_, hidden_}; }
    std::span<double> out() { return {base_ + 3 * hidden_, n_cat_}; }

   private:
    static constexpr std::size_t kInline = 512;
    std::size_t hidden_, n_cat_;
    double inline_[kInline];
    std::vector<double> heap_;
    double* base_ = inline_;
  };

  void hidden_pre(std::span<const std::uint8_t> values, std::span<const std::size_t> active,
                  std::span<double> pre) const;
  void output_log_probs(std::span<const double> pre, std::span<double> act, std::span<double> out) const;

  MlpShape shape_;
  std::vector<double> params_;
};

}  // namespace fedcd
