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
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fedcd/mlp.hpp"
#include "fedcd/rng.hpp"

using namespace fedcd;

namespace {

double nll(const CategoricalMlp& m, const std::vector<std::uint8_t>& x, const std::vector<std::size_t>& active,
           std::size_t target) {
  std::vector<double> lp(m.shape().n_categories);
  m.log_probs(x, active, lp);
  return -lp[target];
}

}  // namespace

TEST_CASE("log probabilities normalize") {
  CategoricalMlp m(MlpShape{3, 10, 16, 48});
  Rng rng(1);
  m.initialize(rng, 2.0);
  std::vector<double> lp(10);
  m.log_probs(std::vector<std::uint8_t>{1, 2, 3}, std::vector<std::size_t>{0, 2}, lp);
  double sum = 0;
  for (double v : lp) sum += std::exp(v);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("inactive inputs are ignored") {
  CategoricalMlp m(MlpShape{3, 5, 4, 8});
  Rng rng(2);
  m.initialize(rng);
  const std::vector<std::size_t> active{1};
  CHECK(nll(m, {0, 3, 4}, active, 2) == nll(m, {4, 3, 0}, active, 2));
  CHECK(nll(m, {0, 3, 4}, {0, 1}, 2) != nll(m, {4, 3, 0}, {0, 1}, 2));
}

TEST_CASE("table evaluation matches the direct forward pass") {
  CategoricalMlp m(MlpShape{4, 10, 16, 48});
  Rng rng(3);
  m.initialize(rng, 1.5);
  const auto table = m.input_table();
  for (int t = 0; t < 50; ++t) {
    std::vector<std::uint8_t> x(4), mask(4);
    std::vector<std::size_t> active;
    for (std::size_t v = 0; v < 4; ++v) {
      x[v] = static_cast<std::uint8_t>(rng.below(10));
      mask[v] = rng.bernoulli(0.5) ? 1 : 0;
      if (mask[v]) active.push_back(v);
    }
    const std::size_t target = rng.below(10);
    CHECK(m.nll_with_table(table, x, mask, target) == doctest::Approx(nll(m, x, active, target)).epsilon(1e-12));
  }
}

TEST_CASE("backprop matches central finite differences") {
  // Small toy: 3 categorical inputs, every parameter checked.
  CategoricalMlp m(MlpShape{3, 4, 3, 5});
  Rng rng(4);
  for (int point = 0; point < 10; ++point) {
    m.initialize(rng, 1.0);
    std::vector<std::uint8_t> x{static_cast<std::uint8_t>(rng.below(4)), static_cast<std::uint8_t>(rng.below(4)),
                                static_cast<std::uint8_t>(rng.below(4))};
    const std::vector<std::size_t> active{0, 2};
    const std::size_t target = rng.below(4);
    std::vector<double> grad(m.num_params(), 0.0);
    const double value = m.accumulate_nll_gradient(x, active, target, grad);
    CHECK(value == doctest::Approx(nll(m, x, active, target)).epsilon(1e-12));
    auto params = m.params();
    const double h = 1e-6;
    for (std::size_t k = 0; k < params.size(); ++k) {
      const double saved = params[k];
      params[k] = saved + h;
      const double up = nll(m, x, active, target);
      params[k] = saved - h;
      const double down = nll(m, x, active, target);
      params[k] = saved;
      const double fd = (up - down) / (2 * h);
      CHECK(std::abs(fd - grad[k]) <= 1e-3 * std::max(std::abs(fd), std::abs(grad[k])) + 1e-8);
    }
  }
}

TEST_CASE("gradients accumulate") {
  CategoricalMlp m(MlpShape{2, 3, 2, 4});
  Rng rng(5);
  m.initialize(rng);
  std::vector<double> once(m.num_params(), 0.0), twice(m.num_params(), 0.0);
  const std::vector<std::uint8_t> x{1, 2};
  const std::vector<std::size_t> active{0, 1};
  m.accumulate_nll_gradient(x, active, 0, once);
  m.accumulate_nll_gradient(x, active, 0, twice);
  m.accumulate_nll_gradient(x, active, 0, twice);
  for (std::size_t k = 0; k < once.size(); ++k) CHECK(twice[k] == doctest::Approx(2 * once[k]));
}
