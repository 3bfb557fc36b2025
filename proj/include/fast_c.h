/* C API for the fast coreset-selection core.
 *
 * All functions return a fast_status (FAST_OK on success) unless they are
 * plain getters; on failure fast_last_error() holds a thread-local message.
 * Handles are opaque and must be released with the matching _free call.
 * Buffer-filling getters expect caller-allocated storage sized from the
 * corresponding count getter.
 */

#ifndef FAST_C_H
#define FAST_C_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FAST_API __declspec(dllexport)
#else
#define FAST_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef int32_t fast_status;
enum {
  FAST_OK = 0,
  FAST_ERR_INVALID_ARGUMENT = 1,
  FAST_ERR_IO = 2,
  FAST_ERR_FORMAT = 3,
  FAST_ERR_NUMERIC = 4,
  FAST_ERR_INTERNAL = 5
};

typedef struct fast_dataset fast_dataset;
typedef struct fast_config fast_config;
typedef struct fast_graph fast_graph;
typedef struct fast_selection fast_selection;
typedef struct fast_eval fast_eval;

/* Thread-local message for the most recent failure in this thread. */
FAST_API const char* fast_last_error(void);
FAST_API const char* fast_version(void);

/* FNV-1a checksum of a file (manifest plumbing). */
FAST_API fast_status fast_checksum_file(const char* path, uint64_t* out);

/* ---- dataset ---------------------------------------------------------- */

/* values: row-major n x d; labels: NULL or n entries (any integers; they are
 * remapped to contiguous ids). */
FAST_API fast_status fast_dataset_create(const double* values, int64_t n, int64_t d,
                                         const int32_t* labels, fast_dataset** out);
/* format: "csv", "rawf32" or "auto". */
FAST_API fast_status fast_dataset_load(const char* path, const char* format, fast_dataset** out);
FAST_API fast_status fast_dataset_save_rawf32(const fast_dataset* ds, const char* path);
FAST_API int64_t fast_dataset_rows(const fast_dataset* ds);
FAST_API int64_t fast_dataset_dims(const fast_dataset* ds);
FAST_API int32_t fast_dataset_has_labels(const fast_dataset* ds);
FAST_API fast_status fast_dataset_values(const fast_dataset* ds, double* out /* n*d */);
FAST_API fast_status fast_dataset_labels(const fast_dataset* ds, int32_t* out /* n */);
FAST_API void fast_dataset_free(fast_dataset* ds);

/* ---- configuration ----------------------------------------------------- */

FAST_API fast_status fast_config_create(fast_config** out);
/* Unknown keys and malformed values are errors. */
FAST_API fast_status fast_config_set(fast_config* cfg, const char* key, const char* value);
FAST_API fast_status fast_config_load_file(fast_config* cfg, const char* path);
/* Canonical sorted key=value snapshot. Returns the required size including
 * the terminating NUL; writes up to cap bytes when buf is non-NULL. */
FAST_API int64_t fast_config_snapshot(const fast_config* cfg, char* buf, int64_t cap);
FAST_API void fast_config_free(fast_config* cfg);

/* ---- graph stage ------------------------------------------------------- */

FAST_API fast_status fast_graph_build(const fast_dataset* ds, const fast_config* cfg,
                                      fast_graph** out);
FAST_API int64_t fast_graph_nodes(const fast_graph* g);
/* Undirected edge count (each pair reported once, i < j). */
FAST_API int64_t fast_graph_edge_count(const fast_graph* g);
FAST_API fast_status fast_graph_edges(const fast_graph* g, int64_t* rows, int64_t* cols,
                                      double* weights);
FAST_API int64_t fast_graph_embed_dim(const fast_graph* g);
/* Full Laplacian spectrum, ascending, zero eigenvalues included (length =
 * node count). */
FAST_API fast_status fast_graph_eigenvalues(const fast_graph* g, double* out /* nodes */);
FAST_API fast_status fast_graph_embedding(const fast_graph* g, double* out /* n*dim row-major */);
FAST_API void fast_graph_free(fast_graph* g);

/* ---- selection --------------------------------------------------------- */

FAST_API fast_status fast_select(const fast_dataset* ds, const fast_config* cfg,
                                 fast_selection** out);
/* Global (unstratified) selection reusing a precomputed embedding. */
FAST_API fast_status fast_select_with_embedding(const fast_dataset* ds, const fast_config* cfg,
                                                const double* embedding /* n*d row-major */,
                                                int64_t d, fast_selection** out);
FAST_API int64_t fast_selection_count(const fast_selection* sel);
FAST_API fast_status fast_selection_indices(const fast_selection* sel, int64_t* out);
FAST_API double fast_selection_ecfd(const fast_selection* sel);
FAST_API int32_t fast_selection_stratified(const fast_selection* sel);
/* Optimization units: one per class when stratified, one otherwise. */
FAST_API int32_t fast_selection_unit_count(const fast_selection* sel);
FAST_API int32_t fast_selection_unit_class(const fast_selection* sel, int32_t unit);
FAST_API int64_t fast_selection_unit_selected(const fast_selection* sel, int32_t unit);
FAST_API int64_t fast_selection_trace_rows(const fast_selection* sel, int32_t unit);
/* Row-major rows x 7: iteration, main, div, match, graph, total, tau. */
FAST_API fast_status fast_selection_trace(const fast_selection* sel, int32_t unit, double* out);
/* Library audit text; same size contract as fast_config_snapshot. */
FAST_API int64_t fast_selection_library_text(const fast_selection* sel, int32_t unit, char* buf,
                                             int64_t cap);
/* graph, embed, afl, optimize, extract, total seconds. */
FAST_API fast_status fast_selection_timings(const fast_selection* sel, double* out /* 6 */);
/* main, div, match, graph, total. */
FAST_API fast_status fast_selection_final_losses(const fast_selection* sel, double* out /* 5 */);
FAST_API void fast_selection_free(fast_selection* sel);

/* ---- evaluation -------------------------------------------------------- */

FAST_API fast_status fast_evaluate(const fast_dataset* ds, const fast_config* cfg,
                                   const int64_t* indices, int64_t count, fast_eval** out);
FAST_API double fast_eval_ecfd_fast(const fast_eval* ev);
FAST_API double fast_eval_ecfd_random_median(const fast_eval* ev);
FAST_API int32_t fast_eval_random_count(const fast_eval* ev);
FAST_API fast_status fast_eval_ecfd_random(const fast_eval* ev, double* out);
/* Orders 1..4 for the selection and the random-baseline median. */
FAST_API fast_status fast_eval_moment_errors(const fast_eval* ev, double* sel4, double* rand4);
FAST_API int32_t fast_eval_strategy_count(const fast_eval* ev);
/* iterations is -1 when the strategy never reached the threshold. */
FAST_API fast_status fast_eval_strategy(const fast_eval* ev, int32_t idx, char* name_buf,
                                        int64_t name_cap, int32_t* iterations, double* final_ecfd,
                                        double* threshold);
FAST_API void fast_eval_free(fast_eval* ev);

#ifdef __cplusplus
}
#endif

#endif /* FAST_C_H */
