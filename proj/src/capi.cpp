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
#include "fedcd/fedcd.h"

#include <cstring>
#include <fstream>
#include <iomanip>
#include <new>
#include <string>
#include <vector>

#include "fedcd/aggregation.hpp"
#include "fedcd/config.hpp"
#include "fedcd/error.hpp"
#include "fedcd/federation.hpp"
#include "fedcd/graph.hpp"
#include "fedcd/harness.hpp"

struct fedcd_dag {
  fedcd::Adjacency adj;
};
struct fedcd_belief {
  fedcd::BeliefMatrix psi;
};
struct fedcd_config {
  fedcd::ExperimentConfig cfg;
};

namespace {

thread_local std::string last_error;

fedcd_status fail(fedcd_status s, const char* msg) {
  last_error = msg;
  return s;
}

// Runs f, translating exceptions into status codes.
template <class F>
fedcd_status guarded(F&& f) {
  try {
    f();
    last_error.clear();
    return FEDCD_OK;
  } catch (const fedcd::Error& e) {
    switch (e.kind()) {
      case fedcd::ErrorKind::invalid_argument: return fail(FEDCD_ERR_INVALID_ARGUMENT, e.what());
      case fedcd::ErrorKind::config: return fail(FEDCD_ERR_CONFIG, e.what());
      case fedcd::ErrorKind::io: return fail(FEDCD_ERR_IO, e.what());
      case fedcd::ErrorKind::runtime: return fail(FEDCD_ERR_RUNTIME, e.what());
    }
    return fail(FEDCD_ERR_INTERNAL, e.what());
  } catch (const std::bad_alloc&) {
    return fail(FEDCD_ERR_RUNTIME, "out of memory");
  } catch (const std::exception& e) {
    return fail(FEDCD_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(FEDCD_ERR_INTERNAL, "unknown error");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw fedcd::invalid_argument(what);
}

fedcd_dag* wrap(fedcd::Adjacency a) { return new fedcd_dag{std::move(a)}; }

fedcd::MassMap masses_row(const double* row, std::size_t n) {
  fedcd::MassMap m;
  for (std::size_t s = 0; s < n; ++s)
    if (row[s] >= 0.0) m[s] = row[s];
  return m;
}

}  // namespace

extern "C" {

const char* fedcd_version(void) { return "0.1.0"; }

const char* fedcd_last_error(void) { return last_error.c_str(); }

fedcd_status fedcd_dag_generate_er(size_t n_nodes, double er_n, uint64_t seed, fedcd_dag** out) {
  return guarded([&] {
    require(out, "out is null");
    *out = wrap(fedcd::generate_er(n_nodes, er_n, seed).adjacency());
  });
}

fedcd_status fedcd_dag_generate_structured(const char* kind, size_t n_nodes, fedcd_dag** out) {
  return guarded([&] {
    require(kind && out, "null argument");
    *out = wrap(fedcd::generate_structured(fedcd::parse_structured_kind(kind), n_nodes).adjacency());
  });
}

fedcd_status fedcd_dag_builtin(const char* name, fedcd_dag** out) {
  return guarded([&] {
    require(name && out, "null argument");
    *out = wrap(fedcd::load_builtin(name).adjacency());
  });
}

fedcd_status fedcd_dag_from_edges(size_t n_nodes, const size_t* edges, size_t n_edges, fedcd_dag** out) {
  return guarded([&] {
    require(out && (edges || n_edges == 0), "null argument");
    fedcd::Adjacency a(n_nodes);
    for (std::size_t e = 0; e < n_edges; ++e) {
      require(edges[2 * e] < n_nodes && edges[2 * e + 1] < n_nodes, "edge endpoint out of range");
      a.set(edges[2 * e], edges[2 * e + 1], true);
    }
    *out = wrap(fedcd::Dag(a).adjacency());
  });
}

fedcd_status fedcd_dag_load(const char* path, fedcd_dag** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = wrap(fedcd::load_edge_list(path));
  });
}

fedcd_status fedcd_dag_save(const fedcd_dag* dag, const char* path) {
  return guarded([&] {
    require(dag && path, "null argument");
    fedcd::save_edge_list(path, dag->adj);
  });
}

size_t fedcd_dag_num_nodes(const fedcd_dag* dag) { return dag ? dag->adj.n_nodes() : 0; }

size_t fedcd_dag_num_edges(const fedcd_dag* dag) { return dag ? dag->adj.num_edges() : 0; }

fedcd_status fedcd_dag_edges(const fedcd_dag* dag, size_t* edges, size_t capacity, size_t* written) {
  return guarded([&] {
    require(dag && written && (edges || capacity == 0), "null argument");
    std::size_t k = 0;
    for (const auto& [i, j] : dag->adj.edges()) {
      if (k == capacity) break;
      edges[2 * k] = i;
      edges[2 * k + 1] = j;
      ++k;
    }
    *written = k;
  });
}

fedcd_status fedcd_dag_has_edge(const fedcd_dag* dag, size_t i, size_t j, int* out) {
  return guarded([&] {
    require(dag && out, "null argument");
    require(i < dag->adj.n_nodes() && j < dag->adj.n_nodes(), "node index out of range");
    *out = dag->adj(i, j) ? 1 : 0;
  });
}

void fedcd_dag_free(fedcd_dag* dag) { delete dag; }

fedcd_status fedcd_shd(const fedcd_dag* a, const fedcd_dag* b, size_t reversal_cost, size_t* out) {
  return guarded([&] {
    require(a && b && out, "null argument");
    *out = fedcd::shd(a->adj, b->adj, reversal_cost);
  });
}

fedcd_status fedcd_belief_create(size_t n_nodes, const double* values, double fill, fedcd_belief** out) {
  return guarded([&] {
    require(out, "out is null");
    if (values) {
      *out = new fedcd_belief{fedcd::BeliefMatrix(n_nodes, std::vector<double>(values, values + n_nodes * n_nodes))};
    } else {
      *out = new fedcd_belief{fedcd::BeliefMatrix(n_nodes, fill)};
    }
  });
}

fedcd_status fedcd_belief_load(const char* path, fedcd_belief** out) {
  return guarded([&] {
    require(path && out, "null argument");
    std::ifstream is(path);
    if (!is) throw fedcd::io_error(std::string("cannot read ") + path);
    *out = new fedcd_belief{fedcd::read_belief_csv(is)};
  });
}

fedcd_status fedcd_belief_save(const fedcd_belief* psi, const char* path) {
  return guarded([&] {
    require(psi && path, "null argument");
    std::ofstream os(path);
    if (!os) throw fedcd::io_error(std::string("cannot write ") + path);
    fedcd::write_belief_csv(os, psi->psi);
  });
}

size_t fedcd_belief_num_nodes(const fedcd_belief* psi) { return psi ? psi->psi.n_nodes() : 0; }

fedcd_status fedcd_belief_values(const fedcd_belief* psi, double* out, size_t capacity) {
  return guarded([&] {
    require(psi && out, "null argument");
    const auto& v = psi->psi.values();
    require(capacity >= v.size(), "capacity smaller than N*N");
    std::copy(v.begin(), v.end(), out);
  });
}

void fedcd_belief_free(fedcd_belief* psi) { delete psi; }

fedcd_status fedcd_belief_to_dag(const fedcd_belief* psi, fedcd_dag** out) {
  return guarded([&] {
    require(psi && out, "null argument");
    *out = wrap(fedcd::prune_to_dag(fedcd::belief_to_adjacency(psi->psi), psi->psi));
  });
}

fedcd_status fedcd_belief_entropy(const fedcd_belief* psi, double* out) {
  return guarded([&] {
    require(psi && out, "null argument");
    *out = fedcd::avg_edge_entropy(psi->psi);
  });
}

fedcd_status fedcd_aggregate_naive(const fedcd_belief* const* beliefs, const size_t* sizes, size_t n_clients,
                                   fedcd_belief** out) {
  return guarded([&] {
    require(beliefs && sizes && out, "null argument");
    std::vector<fedcd::BeliefMatrix> b;
    for (std::size_t k = 0; k < n_clients; ++k) {
      require(beliefs[k], "null belief");
      b.push_back(beliefs[k]->psi);
    }
    *out = new fedcd_belief{fedcd::naive_aggregate(b, std::span<const std::size_t>(sizes, n_clients))};
  });
}

fedcd_status fedcd_aggregate_proximity(const fedcd_belief* psi_prev, const fedcd_belief* const* beliefs,
                                       const double* masses, size_t n_clients, double beta, fedcd_belief** out) {
  return guarded([&] {
    require(psi_prev && beliefs && masses && out, "null argument");
    const std::size_t n = psi_prev->psi.n_nodes();
    std::vector<fedcd::MassMap> maps;
    for (std::size_t k = 0; k < n_clients; ++k) maps.push_back(masses_row(masses + k * n, n));
    std::vector<fedcd::ClientSummary> clients;
    for (std::size_t k = 0; k < n_clients; ++k) {
      require(beliefs[k], "null belief");
      clients.push_back({&beliefs[k]->psi, &maps[k]});
    }
    fedcd::ProximityOptions options;
    options.beta = beta;
    *out = new fedcd_belief{fedcd::proximity_aggregate(psi_prev->psi, clients, options)};
  });
}

fedcd_status fedcd_mass_flow_reliability(const fedcd_dag* structure, const fedcd_belief* client_belief,
                                         const double* masses, double* out, size_t capacity) {
  return guarded([&] {
    require(structure && client_belief && masses && out, "null argument");
    const std::size_t n = structure->adj.n_nodes();
    require(capacity >= n * n, "capacity smaller than N*N");
    const auto r = fedcd::mass_flow_reliability(structure->adj, client_belief->psi, masses_row(masses, n));
    std::copy(r.r.begin(), r.r.end(), out);
  });
}

fedcd_status fedcd_softmax_weights(const double* scores, size_t n, double beta, double* out) {
  return guarded([&] {
    require(scores && out, "null argument");
    require(n > 0, "no scores");
    const auto w = fedcd::softmax_weights(std::span<const double>(scores, n), beta);
    std::copy(w.begin(), w.end(), out);
  });
}

fedcd_status fedcd_config_load(const char* path, fedcd_config** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new fedcd_config{fedcd::load_config(path)};
  });
}

fedcd_status fedcd_config_parse(const char* json_text, fedcd_config** out) {
  return guarded([&] {
    require(json_text && out, "null argument");
    *out = new fedcd_config{fedcd::parse_config(json_text)};
  });
}

fedcd_status fedcd_config_set_seeds(fedcd_config* cfg, const uint64_t* seeds, size_t n) {
  return guarded([&] {
    require(cfg && seeds, "null argument");
    cfg->cfg.seeds.assign(seeds, seeds + n);
    cfg->cfg.validate();
  });
}

fedcd_status fedcd_config_set_output_dir(fedcd_config* cfg, const char* dir) {
  return guarded([&] {
    require(cfg && dir, "null argument");
    cfg->cfg.output_dir = dir;
  });
}

fedcd_status fedcd_config_to_json(const fedcd_config* cfg, char* buf, size_t capacity, size_t* needed) {
  return guarded([&] {
    require(cfg && needed, "null argument");
    const std::string text = fedcd::to_json(cfg->cfg);
    *needed = text.size() + 1;
    if (buf && capacity > 0) {
      const std::size_t n = std::min(capacity - 1, text.size());
      std::memcpy(buf, text.data(), n);
      buf[n] = '\0';
    }
  });
}

void fedcd_config_free(fedcd_config* cfg) { delete cfg; }

fedcd_status fedcd_generate(const fedcd_config* cfg, const char* out_dir) {
  return guarded([&] {
    require(cfg, "null config");
    fedcd::generate_datasets(cfg->cfg, out_dir ? out_dir : cfg->cfg.output_dir);
  });
}

fedcd_status fedcd_run(const fedcd_config* cfg, const char* out_dir, fedcd_run_summary* summary) {
  return guarded([&] {
    require(cfg, "null config");
    const auto s = fedcd::run_all(cfg->cfg, out_dir ? out_dir : cfg->cfg.output_dir);
    if (summary) *summary = {s.seeds.size(), s.n_ok, s.mean_shd, s.stderr_shd, s.ci95_low, s.ci95_high};
  });
}

fedcd_status fedcd_sweep(const fedcd_config* cfg, const char* axis, const double* values, size_t n_values,
                         const char* out_dir) {
  return guarded([&] {
    require(cfg && axis && (values || n_values == 0), "null argument");
    fedcd::sweep(cfg->cfg, fedcd::parse_sweep_axis(axis), std::vector<double>(values, values + n_values),
                 out_dir ? out_dir : cfg->cfg.output_dir);
  });
}

fedcd_status fedcd_eval(const char* result_dir, const char* truth_path, size_t reversal_cost, const char* report_path,
                        fedcd_eval_summary* summary) {
  return guarded([&] {
    require(result_dir, "null result directory");
    const auto report = fedcd::evaluate(result_dir, truth_path ? truth_path : "", reversal_cost);
    if (report_path) {
      std::ofstream os(report_path);
      if (!os) throw fedcd::io_error(std::string("cannot write ") + report_path);
      os << "seed,stored_shd,recomputed_shd\n";
      for (const auto& e : report.entries)
        os << e.seed << ',' << (e.stored_shd ? std::to_string(*e.stored_shd) : "") << ',' << e.recomputed_shd << '\n';
    }
    if (summary) *summary = {report.entries.size(), report.mean_shd, report.consistent ? 1 : 0};
  });
}

}  // extern "C"
