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

#include "fedcd/aggregation.hpp"
#include "fedcd/rng.hpp"
#include "test_util.hpp"

using namespace fedcd;
using fedcd::test::check_error;

namespace {

// The two-client toy network: six variables (0-based here), client one
// intervenes on X1, client two on X3.
struct Toy {
  Adjacency structure{6};
  BeliefMatrix c1{6, 0.0}, c2{6, 0.0};
  Toy() {
    const std::size_t e[6][2] = {{0, 1}, {0, 2}, {2, 3}, {2, 4}, {4, 5}, {3, 5}};
    const double b1[6] = {0.6, 0.6, 0.5, 0.9, 0.8, 0.7};
    const double b2[6] = {0.5, 0.5, 0.8, 0.9, 0.5, 0.5};
    for (int k = 0; k < 6; ++k) {
      structure.set(e[k][0], e[k][1]);
      c1.set(e[k][0], e[k][1], b1[k]);
      c2.set(e[k][0], e[k][1], b2[k]);
    }
  }
};

BeliefMatrix random_belief(std::size_t n, Rng& rng) {
  BeliefMatrix psi(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) psi.set(i, j, rng.uniform());
  return psi;
}

}  // namespace

TEST_CASE("naive aggregation") {
  BeliefMatrix a(2, 0.0), b(2, 0.0);
  a.set(0, 1, 0.4);
  b.set(0, 1, 0.8);
  const std::vector<BeliefMatrix> both{a, b};
  CHECK(naive_aggregate(both, std::vector<std::size_t>{10, 10})(0, 1) == doctest::Approx(0.6));
  CHECK(naive_aggregate(both, std::vector<std::size_t>{1000, 3000})(0, 1) == doctest::Approx(0.7));
  CHECK(naive_aggregate(std::vector<BeliefMatrix>{a}, std::vector<std::size_t>{5}) == a);
  check_error(ErrorKind::invalid_argument, [&] { naive_aggregate(both, std::vector<std::size_t>{0, 0}); });
  check_error(ErrorKind::invalid_argument, [&] { naive_aggregate({}, {}); });
  const std::vector<BeliefMatrix> mixed{a, BeliefMatrix(3, 0.1)};
  check_error(ErrorKind::invalid_argument, [&] { naive_aggregate(mixed, std::vector<std::size_t>{1, 1}); });
}

TEST_CASE("toy network reliabilities") {
  const Toy toy;
  const auto r1 = mass_flow_reliability(toy.structure, toy.c1, MassMap{{0, 1.0}});
  const auto r2 = mass_flow_reliability(toy.structure, toy.c2, MassMap{{2, 1.0}});
  CHECK(r1(4, 5) == doctest::Approx(0.432).epsilon(1e-12));
  // The stated rule gives 0.9 * 0.5 = 0.45 for the second client (the
  // worked example prints 0.540).
  CHECK(r2(4, 5) == doctest::Approx(0.45).epsilon(1e-12));
  CHECK(r2(0, 1) == 0.0);  // X1 is upstream of the second client's source
  CHECK(r1(1, 0) == 0.0);  // not an edge

  const std::vector<double> printed{0.432, 0.540};
  const auto w = softmax_weights(printed, 2.0);
  CHECK(std::abs(w[0] - 0.446) <= 0.001);
  CHECK(std::abs(w[1] - 0.554) <= 0.001);

  // With the printed weights and the clients' beliefs 0.8 and 0.5.
  CHECK(w[0] * 0.8 + w[1] * 0.5 == doctest::Approx(0.634).epsilon(0.001));
}

TEST_CASE("empty intervention set gives zero reliability") {
  const Toy toy;
  const auto r = mass_flow_reliability(toy.structure, toy.c1, MassMap{});
  for (double v : r.r) CHECK(v == 0.0);
  check_error(ErrorKind::invalid_argument, [&] { mass_flow_reliability(toy.structure, toy.c1, MassMap{{9, 1.0}}); });
  check_error(ErrorKind::invalid_argument,
              [&] { mass_flow_reliability(toy.structure, BeliefMatrix(3, 0.1), MassMap{{0, 1.0}}); });
}

TEST_CASE("dynamic program equals path enumeration on random DAGs") {
  Rng rng(17);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 2 + rng.below(5);
    const Adjacency g = generate_er(n, rng.uniform(0.0, 0.5 * static_cast<double>(n - 1)), rng.next()).adjacency();
    const BeliefMatrix psi = random_belief(n, rng);
    MassMap masses;
    for (std::size_t s = 0; s < n; ++s)
      if (rng.bernoulli(0.4)) masses[s] = rng.uniform();
    const auto dp = mass_flow_reliability(g, psi, masses);
    const auto bf = mass_flow_reliability_bruteforce(g, psi, masses);
    CHECK(dp.r == bf.r);
    for (double v : dp.r) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("softmax weights") {
  const std::vector<double> equal{0.3, 0.3, 0.3, 0.3};
  for (double w : softmax_weights(equal, 2.0)) CHECK(w == doctest::Approx(0.25));
  const std::vector<double> spread{0.0, 1.0, 0.5};
  for (double w : softmax_weights(spread, 1e-9)) CHECK(w == doctest::Approx(1.0 / 3.0));
  const auto w = softmax_weights(spread, 3.0);
  CHECK(w[1] > w[2]);
  CHECK(w[2] > w[0]);
  CHECK(w[0] + w[1] + w[2] == doctest::Approx(1.0));
  // permutation equivariance
  const std::vector<double> permuted{0.5, 0.0, 1.0};
  const auto wp = softmax_weights(permuted, 3.0);
  CHECK(wp[0] == doctest::Approx(w[2]));
  CHECK(wp[1] == doctest::Approx(w[0]));
  CHECK(wp[2] == doctest::Approx(w[1]));
  const std::vector<double> huge{1000.0, 999.0};
  const auto wh = softmax_weights(huge, 10.0);
  CHECK(std::isfinite(wh[0]));
  CHECK(wh[0] + wh[1] == doctest::Approx(1.0));
}

TEST_CASE("proximity aggregation") {
  Rng rng(23);
  const ProximityOptions options;
  SUBCASE("single client is the identity") {
    const BeliefMatrix prev = random_belief(5, rng), psi = random_belief(5, rng);
    const MassMap m{{1, 1.0}};
    const std::vector<ClientSummary> one{{&psi, &m}};
    const BeliefMatrix out = proximity_aggregate(prev, one, options);
    for (std::size_t e = 0; e < psi.values().size(); ++e) CHECK(out.values()[e] == doctest::Approx(psi.values()[e]));
  }
  SUBCASE("identical clients reproduce their belief") {
    const BeliefMatrix prev = random_belief(5, rng), psi = random_belief(5, rng);
    const MassMap m{{0, 1.0}, {3, 0.5}};
    const std::vector<ClientSummary> three{{&psi, &m}, {&psi, &m}, {&psi, &m}};
    const BeliefMatrix out = proximity_aggregate(prev, three, options);
    for (std::size_t e = 0; e < psi.values().size(); ++e) CHECK(out.values()[e] == doctest::Approx(psi.values()[e]));
  }
  SUBCASE("toy network edge uses the reliability weights") {
    const Toy toy;
    BeliefMatrix prev(6, 0.0);
    for (auto [i, j] : toy.structure.edges()) prev.set(i, j, 0.9);
    const MassMap m1{{0, 1.0}}, m2{{2, 1.0}};
    const std::vector<ClientSummary> clients{{&toy.c1, &m1}, {&toy.c2, &m2}};
    std::vector<ReliabilityScores> scores;
    const BeliefMatrix out = proximity_aggregate(prev, clients, options, &scores);
    const std::vector<double> r{0.432, 0.45};
    const auto w = softmax_weights(r, 2.0);
    CHECK(scores[0](4, 5) == doctest::Approx(0.432));
    CHECK(out(4, 5) == doctest::Approx(w[0] * 0.8 + w[1] * 0.5));
    // Non-edges of the previous structure are plain means.
    CHECK(out(5, 4) == doctest::Approx(0.0));
    CHECK(out(1, 3) == doctest::Approx(0.5 * (toy.c1(1, 3) + toy.c2(1, 3))));
  }
  SUBCASE("equal reliabilities reduce to the equal-weight mean") {
    const BeliefMatrix prev = random_belief(4, rng), a = random_belief(4, rng), b = random_belief(4, rng);
    const MassMap none;
    const std::vector<ClientSummary> clients{{&a, &none}, {&b, &none}};
    const BeliefMatrix out = proximity_aggregate(prev, clients, options);
    const std::vector<BeliefMatrix> both{a, b};
    const BeliefMatrix mean = naive_aggregate(both, std::vector<std::size_t>{1, 1});
    for (std::size_t e = 0; e < out.values().size(); ++e) CHECK(out.values()[e] == doctest::Approx(mean.values()[e]));
  }
  SUBCASE("outputs stay within the convex hull of the inputs") {
    for (int t = 0; t < 50; ++t) {
      const BeliefMatrix prev = random_belief(5, rng), a = random_belief(5, rng), b = random_belief(5, rng);
      const MassMap ma{{rng.below(5), 1.0}}, mb{{rng.below(5), rng.uniform()}};
      const std::vector<ClientSummary> clients{{&a, &ma}, {&b, &mb}};
      for (auto rule : {NonEdgeRule::uniform, NonEdgeRule::path_product}) {
        ProximityOptions o;
        o.non_edges = rule;
        const BeliefMatrix out = proximity_aggregate(prev, clients, o);
        for (std::size_t e = 0; e < out.values().size(); ++e) {
          CHECK(out.values()[e] >= std::min(a.values()[e], b.values()[e]) - 1e-12);
          CHECK(out.values()[e] <= std::max(a.values()[e], b.values()[e]) + 1e-12);
        }
      }
    }
  }
  SUBCASE("errors") {
    const BeliefMatrix prev(3, 0.5);
    check_error(ErrorKind::invalid_argument, [&] { proximity_aggregate(prev, {}, options); });
    const BeliefMatrix wrong(4, 0.5);
    const MassMap m;
    const std::vector<ClientSummary> bad{{&wrong, &m}};
    check_error(ErrorKind::invalid_argument, [&] { proximity_aggregate(prev, bad, options); });
    ProximityOptions zero;
    zero.beta = 0.0;
    const std::vector<ClientSummary> ok{{&prev, &m}};
    check_error(ErrorKind::invalid_argument, [&] { proximity_aggregate(prev, ok, zero); });
  }
}

TEST_CASE("mass normalization") {
  const std::vector<std::map<std::size_t, std::size_t>> counts{{{0, 50}, {1, 100}}, {{2, 25}}, {}};
  const auto m = normalized_masses(counts);
  CHECK(m[0].at(0) == 0.5);
  CHECK(m[0].at(1) == 1.0);
  CHECK(m[1].at(2) == 0.25);
  CHECK(m[2].empty());
}
