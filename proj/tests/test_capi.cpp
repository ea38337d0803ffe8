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
// Exercises the shared library through its C header only, plus the CLI
// exit codes.
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "fedcd/fedcd.h"

namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path dir;
  explicit Scratch(const char* tag) {
    std::random_device rd;
    dir = fs::temp_directory_path() / ("fedcd_capi_" + std::string(tag) + "_" + std::to_string(rd()));
    fs::create_directories(dir);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  std::string operator/(const char* rel) const { return (dir / rel).string(); }
};

const char* kTinyConfig = R"({
  "graph": {"type": "chain", "n_nodes": 3},
  "data": {"n_obs": 300, "n_int": 90},
  "clients": 2,
  "rounds": 2,
  "lcdm": {"alternations": 1, "initial_dist_epochs": 1.0, "dist_epochs": 0.5, "min_graph_steps": 5},
  "seeds": [0]
})";

int exit_code(const std::string& args) {
  const std::string cmd = std::string("\"") + FEDCD_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  REQUIRE(raw != -1);
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

void write_file(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

}  // namespace

TEST_CASE("dag handles") {
  CHECK(std::string(fedcd_version()).size() > 0);
  const size_t edges[] = {0, 1, 1, 2};
  fedcd_dag* a = nullptr;
  REQUIRE(fedcd_dag_from_edges(3, edges, 2, &a) == FEDCD_OK);
  CHECK(fedcd_dag_num_nodes(a) == 3);
  CHECK(fedcd_dag_num_edges(a) == 2);
  int has = -1;
  CHECK(fedcd_dag_has_edge(a, 1, 2, &has) == FEDCD_OK);
  CHECK(has == 1);
  CHECK(fedcd_dag_has_edge(a, 2, 1, &has) == FEDCD_OK);
  CHECK(has == 0);
  CHECK(fedcd_dag_has_edge(a, 7, 1, &has) == FEDCD_ERR_INVALID_ARGUMENT);

  size_t buf[4] = {}, written = 0;
  CHECK(fedcd_dag_edges(a, buf, 1, &written) == FEDCD_OK);
  CHECK(written == 1);
  CHECK(fedcd_dag_edges(a, buf, 2, &written) == FEDCD_OK);
  CHECK(buf[0] == 0);
  CHECK(buf[3] == 2);

  fedcd_dag* chain = nullptr;
  REQUIRE(fedcd_dag_generate_structured("chain", 3, &chain) == FEDCD_OK);
  size_t shd = 99;
  CHECK(fedcd_shd(a, chain, 1, &shd) == FEDCD_OK);
  CHECK(shd == 0);

  const size_t reversed[] = {1, 0, 1, 2};
  fedcd_dag* b = nullptr;
  REQUIRE(fedcd_dag_from_edges(3, reversed, 2, &b) == FEDCD_OK);
  CHECK(fedcd_shd(a, b, 1, &shd) == FEDCD_OK);
  CHECK(shd == 1);
  CHECK(fedcd_shd(a, b, 2, &shd) == FEDCD_OK);
  CHECK(shd == 2);

  const size_t cycle[] = {0, 1, 1, 2, 2, 0};
  fedcd_dag* bad = nullptr;
  CHECK(fedcd_dag_from_edges(3, cycle, 3, &bad) == FEDCD_ERR_INVALID_ARGUMENT);
  CHECK(bad == nullptr);
  CHECK(std::string(fedcd_last_error()).size() > 0);
  CHECK(fedcd_dag_generate_structured("spiral", 3, &bad) == FEDCD_ERR_INVALID_ARGUMENT);
  CHECK(fedcd_dag_builtin("nope", &bad) == FEDCD_ERR_INVALID_ARGUMENT);
  CHECK(fedcd_dag_from_edges(3, edges, 2, nullptr) == FEDCD_ERR_INVALID_ARGUMENT);

  Scratch tmp("dag");
  CHECK(fedcd_dag_save(a, (tmp / "g.txt").c_str()) == FEDCD_OK);
  fedcd_dag* loaded = nullptr;
  REQUIRE(fedcd_dag_load((tmp / "g.txt").c_str(), &loaded) == FEDCD_OK);
  CHECK(fedcd_shd(a, loaded, 1, &shd) == FEDCD_OK);
  CHECK(shd == 0);
  CHECK(fedcd_dag_load((tmp / "missing.txt").c_str(), &bad) == FEDCD_ERR_IO);

  fedcd_dag* er = nullptr;
  REQUIRE(fedcd_dag_generate_er(8, 1.0, 5, &er) == FEDCD_OK);
  CHECK(fedcd_dag_num_nodes(er) == 8);
  fedcd_dag* asia = nullptr;
  REQUIRE(fedcd_dag_builtin("asia", &asia) == FEDCD_OK);
  CHECK(fedcd_dag_num_nodes(asia) == 8);

  for (fedcd_dag* d : {a, b, chain, loaded, er, asia}) fedcd_dag_free(d);
  fedcd_dag_free(nullptr);
}

TEST_CASE("beliefs and aggregation") {
  fedcd_belief* flat = nullptr;
  REQUIRE(fedcd_belief_create(3, nullptr, 0.5, &flat) == FEDCD_OK);
  double h = 0;
  CHECK(fedcd_belief_entropy(flat, &h) == FEDCD_OK);
  CHECK(h == doctest::Approx(1.0));
  fedcd_dag* empty = nullptr;
  REQUIRE(fedcd_belief_to_dag(flat, &empty) == FEDCD_OK);
  CHECK(fedcd_dag_num_edges(empty) == 0);

  const double v[9] = {0, 0.9, 0.2, 0.1, 0, 0.7, 0.3, 0.3, 0};
  fedcd_belief* sharp = nullptr;
  REQUIRE(fedcd_belief_create(3, v, 0, &sharp) == FEDCD_OK);
  fedcd_dag* g = nullptr;
  REQUIRE(fedcd_belief_to_dag(sharp, &g) == FEDCD_OK);
  CHECK(fedcd_dag_num_edges(g) == 2);

  const fedcd_belief* both[] = {flat, sharp};
  const size_t sizes[] = {100, 300};
  fedcd_belief* avg = nullptr;
  REQUIRE(fedcd_aggregate_naive(both, sizes, 2, &avg) == FEDCD_OK);
  double out[9] = {};
  CHECK(fedcd_belief_values(avg, out, 9) == FEDCD_OK);
  CHECK(out[1] == doctest::Approx(0.25 * 0.5 + 0.75 * 0.9));
  CHECK(fedcd_belief_values(avg, out, 8) == FEDCD_ERR_INVALID_ARGUMENT);

  // Round one: a flat previous belief has no structure, so proximity falls
  // back to the plain mean on every entry.
  const double masses[6] = {1.0, -1, -1, -1, -1, 1.0};
  fedcd_belief* prox = nullptr;
  REQUIRE(fedcd_aggregate_proximity(flat, both, masses, 2, 2.0, &prox) == FEDCD_OK);
  CHECK(fedcd_belief_values(prox, out, 9) == FEDCD_OK);
  CHECK(out[1] == doctest::Approx(0.7));
  CHECK(fedcd_aggregate_proximity(flat, both, masses, 0, 2.0, &prox) == FEDCD_ERR_INVALID_ARGUMENT);

  double w[2] = {};
  const double scores[2] = {0.432, 0.45};
  CHECK(fedcd_softmax_weights(scores, 2, 2.0, w) == FEDCD_OK);
  CHECK(w[0] + w[1] == doctest::Approx(1.0));
  CHECK(w[1] > w[0]);
  CHECK(fedcd_softmax_weights(scores, 0, 2.0, w) == FEDCD_ERR_INVALID_ARGUMENT);

  // Mass-flow on a chain 0 -> 1 -> 2 intervened at the root.
  double r[9] = {};
  const double root_mass[3] = {1.0, -1, -1};
  CHECK(fedcd_mass_flow_reliability(g, sharp, root_mass, r, 9) == FEDCD_OK);
  CHECK(r[1] == doctest::Approx(0.9));
  CHECK(r[5] == doctest::Approx(0.63));

  Scratch tmp("belief");
  CHECK(fedcd_belief_save(sharp, (tmp / "b.csv").c_str()) == FEDCD_OK);
  fedcd_belief* loaded = nullptr;
  REQUIRE(fedcd_belief_load((tmp / "b.csv").c_str(), &loaded) == FEDCD_OK);
  CHECK(fedcd_belief_num_nodes(loaded) == 3);
  CHECK(fedcd_belief_values(loaded, out, 9) == FEDCD_OK);
  CHECK(out[5] == doctest::Approx(0.7));
  write_file(tmp / "bad.csv", "0,2\n0.1,0\n");
  fedcd_belief* bad = nullptr;
  CHECK(fedcd_belief_load((tmp / "bad.csv").c_str(), &bad) != FEDCD_OK);

  for (fedcd_belief* b : {flat, sharp, avg, prox, loaded}) fedcd_belief_free(b);
  fedcd_dag_free(empty);
  fedcd_dag_free(g);
}

TEST_CASE("config handles") {
  fedcd_config* cfg = nullptr;
  REQUIRE(fedcd_config_parse(kTinyConfig, &cfg) == FEDCD_OK);
  size_t needed = 0;
  CHECK(fedcd_config_to_json(cfg, nullptr, 0, &needed) == FEDCD_OK);
  REQUIRE(needed > 0);
  std::string text(needed, '\0');
  CHECK(fedcd_config_to_json(cfg, text.data(), text.size(), &needed) == FEDCD_OK);
  CHECK(text.find("\"chain\"") != std::string::npos);
  std::string small(4, 'x');
  CHECK(fedcd_config_to_json(cfg, small.data(), small.size(), &needed) == FEDCD_OK);
  CHECK(small[3] == '\0');

  fedcd_config* again = nullptr;
  CHECK(fedcd_config_parse(text.c_str(), &again) == FEDCD_OK);
  fedcd_config_free(again);

  fedcd_config* bad = nullptr;
  CHECK(fedcd_config_parse("{\"roundz\": 3}", &bad) == FEDCD_ERR_CONFIG);
  CHECK(std::string(fedcd_last_error()).find("roundz") != std::string::npos);
  CHECK(fedcd_config_parse("{not json", &bad) == FEDCD_ERR_CONFIG);
  CHECK(fedcd_config_load("/nonexistent/x.json", &bad) == FEDCD_ERR_CONFIG);
  CHECK(fedcd_config_set_seeds(cfg, nullptr, 0) == FEDCD_ERR_INVALID_ARGUMENT);
  fedcd_config_free(cfg);
}

TEST_CASE("commands through the library") {
  Scratch tmp("cmd");
  fedcd_config* cfg = nullptr;
  REQUIRE(fedcd_config_parse(kTinyConfig, &cfg) == FEDCD_OK);
  const uint64_t seeds[] = {1, 2};
  REQUIRE(fedcd_config_set_seeds(cfg, seeds, 2) == FEDCD_OK);

  CHECK(fedcd_generate(cfg, (tmp / "data").c_str()) == FEDCD_OK);
  CHECK(fs::exists(tmp / "data/seed_2/global/manifest.json"));

  fedcd_run_summary summary{};
  REQUIRE(fedcd_run(cfg, (tmp / "run").c_str(), &summary) == FEDCD_OK);
  CHECK(summary.n_seeds == 2);
  CHECK(summary.n_ok == 2);
  CHECK(summary.ci95_low <= summary.mean_shd);

  fedcd_eval_summary ev{};
  CHECK(fedcd_eval((tmp / "run").c_str(), nullptr, 1, (tmp / "report.csv").c_str(), &ev) == FEDCD_OK);
  CHECK(ev.consistent == 1);
  CHECK(ev.n_seeds == 2);
  CHECK(ev.mean_shd == doctest::Approx(summary.mean_shd));
  CHECK(fs::exists(tmp / "report.csv"));

  const double values[] = {2.0, 8.0};
  CHECK(fedcd_sweep(cfg, "beta", values, 2, (tmp / "sweep").c_str()) == FEDCD_OK);
  CHECK(fs::exists(tmp / "sweep/sweep.csv"));
  CHECK(fedcd_sweep(cfg, "rounds", values, 2, (tmp / "sweep2").c_str()) == FEDCD_ERR_INVALID_ARGUMENT);
  CHECK(fedcd_sweep(cfg, "clients", values, 0, (tmp / "sweep3").c_str()) == FEDCD_ERR_INVALID_ARGUMENT);
  CHECK(fedcd_run(nullptr, (tmp / "x").c_str(), &summary) == FEDCD_ERR_INVALID_ARGUMENT);
  fedcd_config_free(cfg);
}

TEST_CASE("cli exit codes") {
  Scratch tmp("cli");
  const std::string good = tmp / "good.json";
  write_file(good, kTinyConfig);
  const std::string unknown = tmp / "unknown.json";
  write_file(unknown, R"({"rounds": 2, "colour": "red"})");

  CHECK(exit_code("generate --config " + good + " --out " + (tmp / "data")) == 0);
  CHECK(exit_code("run --config " + good + " --out " + (tmp / "run") + " --seeds 0-1") == 0);
  CHECK(fs::exists(tmp / "run/seed_1/history.csv"));
  CHECK(exit_code("eval " + (tmp / "run")) == 0);
  CHECK(exit_code("sweep --config " + good + " --out " + (tmp / "sweep") + " --seeds 0 --axis clients --values 1,2") ==
        0);

  CHECK(exit_code("") == 2);
  CHECK(exit_code("teleport") == 2);
  CHECK(exit_code("run") == 2);
  CHECK(exit_code("run --config " + (tmp / "missing.json")) == 2);
  CHECK(exit_code("run --config " + unknown) == 2);
  CHECK(exit_code("run --config " + good + " --seeds 3-1") == 2);
  CHECK(exit_code("sweep --config " + good + " --axis rounds --values 1") == 2);

  // Runtime failure: every seed's output directory is blocked by a file.
  fs::create_directories(tmp.dir / "blocked");
  write_file(tmp / "blocked/seed_0", "x");
  CHECK(exit_code("run --config " + good + " --out " + (tmp / "blocked") + " --seeds 0") == 1);
  CHECK(exit_code("eval " + (tmp / "nowhere")) == 1);
}
