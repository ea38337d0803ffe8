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

#include <cstdlib>
#include <set>

#include "fedcd/federation.hpp"
#include "test_util.hpp"

using namespace fedcd;
using fedcd::test::check_error;

namespace {

LcdmConfig quick_lcdm(std::uint64_t seed) {
  LcdmConfig cfg;
  cfg.alternations = 1;
  cfg.initial_dist_epochs = 1.0;
  cfg.dist_epochs = 0.5;
  cfg.min_graph_steps = 10;
  cfg.seed = seed;
  return cfg;
}

ExperimentConfig quick_experiment() {
  ExperimentConfig cfg;
  cfg.graph.type = "chain";
  cfg.graph.n_nodes = 4;
  cfg.data.n_obs = 600;
  cfg.data.n_int = 200;
  cfg.clients = 2;
  cfg.rounds = 2;
  cfg.lcdm = quick_lcdm(0);
  return cfg;
}

Dataset chain_data(std::uint64_t seed) {
  const Mechanism m = init_mechanism(generate_structured(StructuredKind::chain, 3), 10, seed);
  return generate_dataset(m, 400, 150, {0, 1, 2}, seed + 1);
}

}  // namespace

TEST_CASE("average edge entropy") {
  CHECK(avg_edge_entropy(BeliefMatrix(4, 0.5)) == doctest::Approx(1.0));
  CHECK(avg_edge_entropy(BeliefMatrix(4, 0.0)) == 0.0);
  CHECK(avg_edge_entropy(BeliefMatrix(4, 1.0)) == 0.0);
  BeliefMatrix half(3, 0.0);
  half.set(0, 1, 0.5);
  half.set(0, 2, 0.5);
  half.set(1, 2, 0.5);
  CHECK(avg_edge_entropy(half) == doctest::Approx(0.5));
}

TEST_CASE("single client under naive aggregation passes its belief through") {
  std::vector<Client> clients;
  clients.emplace_back(0, chain_data(1), quick_lcdm(1));
  ServerState server{BeliefMatrix(3, 0.5), 0, AggregationStrategy::naive, {}};
  const RoundRecord rec = run_round(server, clients, {});
  CHECK(server.psi == clients[0].history().back());
  CHECK(server.round == 1);
  CHECK(rec.round == 0);
  CHECK(clients[0].prior() == server.psi);
}

TEST_CASE("identical clients aggregate to their common belief") {
  for (auto strategy : {AggregationStrategy::naive, AggregationStrategy::proximity}) {
    std::vector<Client> clients;
    clients.emplace_back(0, chain_data(2), quick_lcdm(7));
    clients.emplace_back(1, chain_data(2), quick_lcdm(7));
    ServerState server{BeliefMatrix(3, 0.5), 0, strategy, {}};
    for (int r = 0; r < 2; ++r) {
      run_round(server, clients, {});
      REQUIRE(clients[0].history().back() == clients[1].history().back());
      const auto& psi = clients[0].history().back();
      for (std::size_t e = 0; e < psi.values().size(); ++e)
        CHECK(server.psi.values()[e] == doctest::Approx(psi.values()[e]).epsilon(1e-12));
    }
  }
}

TEST_CASE("round metrics match independent computations and broadcasts are consistent") {
  const Dag truth = generate_structured(StructuredKind::chain, 3);
  std::vector<Client> clients;
  clients.emplace_back(0, chain_data(3), quick_lcdm(3));
  clients.emplace_back(1, chain_data(4), quick_lcdm(4));
  ServerState server{BeliefMatrix(3, 0.5), 0, AggregationStrategy::proximity, {}};
  RoundOptions options;
  options.truth = &truth.adjacency();
  for (int r = 0; r < 2; ++r) {
    const RoundRecord rec = run_round(server, clients, options);
    REQUIRE(rec.shd.has_value());
    CHECK(*rec.shd == shd(prune_to_dag(belief_to_adjacency(server.psi), server.psi), truth.adjacency()));
    CHECK(rec.entropy == doctest::Approx(avg_edge_entropy(server.psi)));
    REQUIRE(rec.clients.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
      const auto& psi = clients[k].history().back();
      CHECK(*rec.clients[k].shd == shd(prune_to_dag(belief_to_adjacency(psi), psi), truth.adjacency()));
      CHECK(clients[k].prior() == server.psi);
    }
  }
}

TEST_CASE("failing clients are skipped; all failing is an error") {
  Dataset empty = chain_data(5);
  empty.observational = Table(3);
  {
    std::vector<Client> clients;
    clients.emplace_back(0, chain_data(5), quick_lcdm(5));
    clients.emplace_back(1, empty, quick_lcdm(6));
    ServerState server{BeliefMatrix(3, 0.5), 0, AggregationStrategy::naive, {}};
    const RoundRecord rec = run_round(server, clients, {});
    CHECK(rec.clients[0].participated);
    CHECK_FALSE(rec.clients[1].participated);
    CHECK_FALSE(rec.clients[1].error.empty());
    CHECK(server.psi == clients[0].history().back());
  }
  {
    std::vector<Client> clients;
    clients.emplace_back(0, empty, quick_lcdm(5));
    ServerState server{BeliefMatrix(3, 0.5), 0, AggregationStrategy::naive, {}};
    check_error(ErrorKind::runtime, [&] { run_round(server, clients, {}); });
  }
  std::vector<Client> none;
  ServerState server{BeliefMatrix(3, 0.5), 0, AggregationStrategy::naive, {}};
  check_error(ErrorKind::invalid_argument, [&] { run_round(server, none, {}); });
}

TEST_CASE("audit log holds only beliefs and metadata") {
  AuditLog audit;
  ExperimentConfig cfg = quick_experiment();
  run_experiment(cfg, 3, &audit);
  const auto entries = audit.entries();
  CHECK(entries.size() == cfg.rounds * cfg.clients * 2);
  const std::set<std::string> allowed_up{"psi", "n_samples", "intervention_counts"};
  for (const auto& e : entries) {
    if (e.direction == "client->server") {
      for (const auto& f : e.fields) CHECK(allowed_up.count(f) == 1);
      // N*N beliefs, one size, (variable, count) per intervened variable
      CHECK(e.scalar_count == 16 + 1 + 2 * 4);
    } else {
      CHECK(e.direction == "server->client");
      CHECK(e.fields == std::vector<std::string>{"psi"});
      CHECK(e.scalar_count == 16);
    }
  }
}

TEST_CASE("experiments") {
  ExperimentConfig cfg = quick_experiment();
  SUBCASE("zero rounds leave the flat prior, which thresholds to the empty graph") {
    cfg.rounds = 0;
    const auto r = run_experiment(cfg, 0);
    CHECK(r.history.empty());
    CHECK(r.final_graph.num_edges() == 0);
    CHECK(r.final_shd == r.truth.num_edges());
  }
  SUBCASE("deterministic per seed") {
    const auto a = run_experiment(cfg, 4), b = run_experiment(cfg, 4);
    CHECK(a.final_psi == b.final_psi);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t t = 0; t < a.history.size(); ++t) {
      CHECK(a.history[t].shd == b.history[t].shd);
      CHECK(a.history[t].entropy == b.history[t].entropy);
    }
  }
  SUBCASE("thread count does not change results") {
    setenv("FEDCAUSAL_THREADS", "1", 1);
    CHECK(thread_cap() == 1);
    const auto serial = run_experiment(cfg, 5);
    setenv("FEDCAUSAL_THREADS", "4", 1);
    CHECK(thread_cap() == 4);
    const auto parallel = run_experiment(cfg, 5);
    unsetenv("FEDCAUSAL_THREADS");
    CHECK(serial.final_psi == parallel.final_psi);
  }
  SUBCASE("early stop halts once beliefs settle") {
    cfg.rounds = 6;
    cfg.early_stop = true;
    cfg.early_stop_tol = 0.5;
    CHECK(run_experiment(cfg, 1).history.size() < 6);
  }
  SUBCASE("invalid config is reported") {
    cfg.clients = 0;
    check_error(ErrorKind::config, [&] { run_experiment(cfg, 0); });
  }
}

TEST_CASE("shards per setup") {
  ExperimentConfig cfg = quick_experiment();
  const Dag truth = build_truth(cfg, 0);
  const Dataset global = build_dataset(cfg, 0, truth);
  CHECK(build_shards(cfg, 0, global).size() == 2);
  cfg.setup = Setup::centralized;
  CHECK(build_shards(cfg, 0, global).front() == global);
  cfg.setup = Setup::isolated;
  cfg.isolated_client = 1;
  ExperimentConfig fed = cfg;
  fed.setup = Setup::federated;
  CHECK(build_shards(cfg, 0, global).front() == build_shards(fed, 0, global)[1]);
  cfg.setup = Setup::federated;
  cfg.split = SplitMode::vertical;
  const auto vertical = build_shards(cfg, 0, global);
  CHECK(vertical[0].intervened() == std::vector<std::size_t>{0, 1});
  CHECK(vertical[1].intervened() == std::vector<std::size_t>{2, 3});
}
