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
/* C interface to the fedcd library. Every function returns a fedcd_status;
 * on failure fedcd_last_error() describes the problem (per thread). Objects
 * are opaque handles released with the matching *_free function. */
#ifndef FEDCD_FEDCD_H
#define FEDCD_FEDCD_H

#include <stddef.h>
#include <stdint.h>

#if defined(FEDCD_BUILDING_LIBRARY)
#define FEDCD_API __attribute__((visibility("default")))
#else
#define FEDCD_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fedcd_status {
  FEDCD_OK = 0,
  FEDCD_ERR_INVALID_ARGUMENT = 1,
  FEDCD_ERR_CONFIG = 2,
  FEDCD_ERR_IO = 3,
  FEDCD_ERR_RUNTIME = 4,
  FEDCD_ERR_INTERNAL = 5
} fedcd_status;

typedef struct fedcd_dag fedcd_dag;
typedef struct fedcd_belief fedcd_belief;
typedef struct fedcd_config fedcd_config;

FEDCD_API const char* fedcd_version(void);
/* Message of the last failed call on this thread; "" if none. */
FEDCD_API const char* fedcd_last_error(void);

/* Graphs. Edge buffers hold (parent, child) pairs, 2 entries per edge. */
FEDCD_API fedcd_status fedcd_dag_generate_er(size_t n_nodes, double er_n, uint64_t seed, fedcd_dag** out);
/* kind: chain | bidiag | collider | full | jungle */
FEDCD_API fedcd_status fedcd_dag_generate_structured(const char* kind, size_t n_nodes, fedcd_dag** out);
/* name: asia | sachs | alarm */
FEDCD_API fedcd_status fedcd_dag_builtin(const char* name, fedcd_dag** out);
FEDCD_API fedcd_status fedcd_dag_from_edges(size_t n_nodes, const size_t* edges, size_t n_edges, fedcd_dag** out);
FEDCD_API fedcd_status fedcd_dag_load(const char* path, fedcd_dag** out);
FEDCD_API fedcd_status fedcd_dag_save(const fedcd_dag* dag, const char* path);
FEDCD_API size_t fedcd_dag_num_nodes(const fedcd_dag* dag);
FEDCD_API size_t fedcd_dag_num_edges(const fedcd_dag* dag);
/* Writes min(capacity, num_edges) edges; *written receives the count. */
FEDCD_API fedcd_status fedcd_dag_edges(const fedcd_dag* dag, size_t* edges, size_t capacity, size_t* written);
FEDCD_API fedcd_status fedcd_dag_has_edge(const fedcd_dag* dag, size_t i, size_t j, int* out);
FEDCD_API void fedcd_dag_free(fedcd_dag* dag);

/* Structural Hamming distance; a reversed edge costs reversal_cost (1 or 2). */
FEDCD_API fedcd_status fedcd_shd(const fedcd_dag* a, const fedcd_dag* b, size_t reversal_cost, size_t* out);

/* Beliefs: row-major N x N values in [0,1] with a zero diagonal. A NULL
 * values pointer creates a matrix filled with `fill` off the diagonal. */
FEDCD_API fedcd_status fedcd_belief_create(size_t n_nodes, const double* values, double fill, fedcd_belief** out);
FEDCD_API fedcd_status fedcd_belief_load(const char* path, fedcd_belief** out);
FEDCD_API fedcd_status fedcd_belief_save(const fedcd_belief* psi, const char* path);
FEDCD_API size_t fedcd_belief_num_nodes(const fedcd_belief* psi);
/* Copies N*N values into out (capacity must be at least N*N). */
FEDCD_API fedcd_status fedcd_belief_values(const fedcd_belief* psi, double* out, size_t capacity);
FEDCD_API void fedcd_belief_free(fedcd_belief* psi);
/* Strict threshold at 0.5 followed by cycle pruning (weakest edge first). */
FEDCD_API fedcd_status fedcd_belief_to_dag(const fedcd_belief* psi, fedcd_dag** out);
/* Mean binary entropy in bits over off-diagonal entries. */
FEDCD_API fedcd_status fedcd_belief_entropy(const fedcd_belief* psi, double* out);

/* Aggregation. */
FEDCD_API fedcd_status fedcd_aggregate_naive(const fedcd_belief* const* beliefs, const size_t* sizes, size_t n_clients,
                                             fedcd_belief** out);
/* masses: n_clients rows of N entries; entry s is the normalized mass of
 * variable s at that client, or a negative value when s is not intervened. */
FEDCD_API fedcd_status fedcd_aggregate_proximity(const fedcd_belief* psi_prev, const fedcd_belief* const* beliefs,
                                                 const double* masses, size_t n_clients, double beta,
                                                 fedcd_belief** out);
/* Reliability scores of one client on a DAG, written as N*N row-major values. */
FEDCD_API fedcd_status fedcd_mass_flow_reliability(const fedcd_dag* structure, const fedcd_belief* client_belief,
                                                   const double* masses, double* out, size_t capacity);
FEDCD_API fedcd_status fedcd_softmax_weights(const double* scores, size_t n, double beta, double* out);

/* Experiment configuration (JSON). */
FEDCD_API fedcd_status fedcd_config_load(const char* path, fedcd_config** out);
FEDCD_API fedcd_status fedcd_config_parse(const char* json_text, fedcd_config** out);
FEDCD_API fedcd_status fedcd_config_set_seeds(fedcd_config* cfg, const uint64_t* seeds, size_t n);
FEDCD_API fedcd_status fedcd_config_set_output_dir(fedcd_config* cfg, const char* dir);
/* Copies the JSON form (NUL-terminated) into buf; *needed receives the full
 * length including the terminator, so buf may be NULL to query it. */
FEDCD_API fedcd_status fedcd_config_to_json(const fedcd_config* cfg, char* buf, size_t capacity, size_t* needed);
FEDCD_API void fedcd_config_free(fedcd_config* cfg);

/* Commands. A NULL out_dir uses the config's output_dir. */
FEDCD_API fedcd_status fedcd_generate(const fedcd_config* cfg, const char* out_dir);

typedef struct fedcd_run_summary {
  size_t n_seeds;
  size_t n_ok;
  double mean_shd;
  double stderr_shd;
  double ci95_low;
  double ci95_high;
} fedcd_run_summary;

FEDCD_API fedcd_status fedcd_run(const fedcd_config* cfg, const char* out_dir, fedcd_run_summary* summary);
/* axis: clients | int_size | beta */
FEDCD_API fedcd_status fedcd_sweep(const fedcd_config* cfg, const char* axis, const double* values, size_t n_values,
                                   const char* out_dir);

typedef struct fedcd_eval_summary {
  size_t n_seeds;
  double mean_shd;
  int consistent; /* 1 when every stored SHD matches its recomputation */
} fedcd_eval_summary;

/* truth_path may be NULL to use each seed's stored truth. When report_path
 * is non-NULL a per-seed CSV is written there. */
FEDCD_API fedcd_status fedcd_eval(const char* result_dir, const char* truth_path, size_t reversal_cost,
                                  const char* report_path, fedcd_eval_summary* summary);

#ifdef __cplusplus
}
#endif

#endif /* FEDCD_FEDCD_H */
