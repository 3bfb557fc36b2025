#include "fast_c.h"

#include <algorithm>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "fast/config.hpp"
#include "fast/errors.hpp"
#include "fast/eval.hpp"
#include "fast/io.hpp"
#include "fast/pipeline.hpp"
#include "fast/version.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

// Maps exceptions from the core to status codes; body runs inside the guard.
template <typename Fn>
fast_status guarded(Fn&& fn) {
  try {
    fn();
    return FAST_OK;
  } catch (const fast::InvalidParameterError& e) {
    set_error(e.what());
    return FAST_ERR_INVALID_ARGUMENT;
  } catch (const fast::FormatError& e) {
    set_error(e.what());
    return FAST_ERR_FORMAT;
  } catch (const fast::IoError& e) {
    set_error(e.what());
    return FAST_ERR_IO;
  } catch (const fast::NumericError& e) {
    set_error(e.what());
    return FAST_ERR_NUMERIC;
  } catch (const std::bad_alloc&) {
    set_error("out of memory");
    return FAST_ERR_INTERNAL;
  } catch (const std::exception& e) {
    set_error(e.what());
    return FAST_ERR_INTERNAL;
  } catch (...) {
    set_error("unknown error");
    return FAST_ERR_INTERNAL;
  }
}

int64_t copy_text(const std::string& text, char* buf, int64_t cap) {
  const auto needed = static_cast<int64_t>(text.size()) + 1;
  if (buf != nullptr && cap > 0) {
    const auto n = std::min<int64_t>(cap - 1, static_cast<int64_t>(text.size()));
    std::memcpy(buf, text.data(), static_cast<std::size_t>(n));
    buf[n] = '\0';
  }
  return needed;
}

}  // namespace

struct fast_dataset {
  fast::DatasetMatrix data;
};

struct fast_config {
  fast::Config cfg;
};

struct fast_graph {
  fast::ManifoldGraph graph;
  fast::SpectralEmbedding embedding;
  Eigen::VectorXd spectrum;  // full, zero eigenvalues included
};

struct fast_selection {
  fast::SelectionResult result;
};

struct fast_eval {
  fast::EvalReport report;
};

extern "C" {

const char* fast_last_error(void) { return g_last_error.c_str(); }

const char* fast_version(void) { return fast::kVersion; }

fast_status fast_checksum_file(const char* path, uint64_t* out) {
  return guarded([&] {
    if (path == nullptr || out == nullptr)
      throw fast::InvalidParameterError("fast_checksum_file: null argument");
    *out = fast::checksum_file(path);
  });
}

/* ---- dataset ---------------------------------------------------------- */

fast_status fast_dataset_create(const double* values, int64_t n, int64_t d, const int32_t* labels,
                                fast_dataset** out) {
  return guarded([&] {
    if (values == nullptr || out == nullptr)
      throw fast::InvalidParameterError("fast_dataset_create: null argument");
    Eigen::MatrixXd m(n, d);
    for (int64_t r = 0; r < n; ++r)
      for (int64_t c = 0; c < d; ++c) m(r, c) = values[r * d + c];
    std::vector<std::int32_t> raw;
    if (labels != nullptr) {
      // remap arbitrary ids to contiguous ones, preserving order
      std::vector<std::int32_t> sorted(labels, labels + n);
      std::sort(sorted.begin(), sorted.end());
      sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
      raw.reserve(static_cast<std::size_t>(n));
      for (int64_t i = 0; i < n; ++i) {
        const auto it = std::lower_bound(sorted.begin(), sorted.end(), labels[i]);
        raw.push_back(static_cast<std::int32_t>(it - sorted.begin()));
      }
    }
    *out = new fast_dataset{fast::DatasetMatrix::create(std::move(m), std::move(raw))};
  });
}

fast_status fast_dataset_load(const char* path, const char* format, fast_dataset** out) {
  return guarded([&] {
    if (path == nullptr || out == nullptr)
      throw fast::InvalidParameterError("fast_dataset_load: null argument");
    *out = new fast_dataset{fast::load_dataset(path, format ? format : "auto")};
  });
}

fast_status fast_dataset_save_rawf32(const fast_dataset* ds, const char* path) {
  return guarded([&] {
    if (ds == nullptr || path == nullptr)
      throw fast::InvalidParameterError("fast_dataset_save_rawf32: null argument");
    fast::save_rawf32(ds->data, path);
  });
}

int64_t fast_dataset_rows(const fast_dataset* ds) { return ds ? ds->data.rows() : 0; }
int64_t fast_dataset_dims(const fast_dataset* ds) { return ds ? ds->data.dims() : 0; }
int32_t fast_dataset_has_labels(const fast_dataset* ds) {
  return ds && ds->data.has_labels() ? 1 : 0;
}

fast_status fast_dataset_values(const fast_dataset* ds, double* out) {
  return guarded([&] {
    if (ds == nullptr || out == nullptr)
      throw fast::InvalidParameterError("fast_dataset_values: null argument");
    for (Eigen::Index r = 0; r < ds->data.rows(); ++r)
      for (Eigen::Index c = 0; c < ds->data.dims(); ++c)
        out[r * ds->data.dims() + c] = ds->data.values(r, c);
  });
}

fast_status fast_dataset_labels(const fast_dataset* ds, int32_t* out) {
  return guarded([&] {
    if (ds == nullptr || out == nullptr)
      throw fast::InvalidParameterError("fast_dataset_labels: null argument");
    if (!ds->data.has_labels())
      throw fast::InvalidParameterError("fast_dataset_labels: dataset has no labels");
    std::memcpy(out, ds->data.labels.data(), ds->data.labels.size() * sizeof(int32_t));
  });
}

void fast_dataset_free(fast_dataset* ds) { delete ds; }

/* ---- configuration ----------------------------------------------------- */

fast_status fast_config_create(fast_config** out) {
  return guarded([&] {
    if (out == nullptr) throw fast::InvalidParameterError("fast_config_create: null argument");
    *out = new fast_config{};
  });
}

fast_status fast_config_set(fast_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    if (cfg == nullptr || key == nullptr || value == nullptr)
      throw fast::InvalidParameterError("fast_config_set: null argument");
    cfg->cfg.set(key, value);
  });
}

fast_status fast_config_load_file(fast_config* cfg, const char* path) {
  return guarded([&] {
    if (cfg == nullptr || path == nullptr)
      throw fast::InvalidParameterError("fast_config_load_file: null argument");
    cfg->cfg.load_file(path);
  });
}

int64_t fast_config_snapshot(const fast_config* cfg, char* buf, int64_t cap) {
  if (cfg == nullptr) return 0;
  return copy_text(cfg->cfg.snapshot(), buf, cap);
}

void fast_config_free(fast_config* cfg) { delete cfg; }

/* ---- graph stage ------------------------------------------------------- */

fast_status fast_graph_build(const fast_dataset* ds, const fast_config* cfg, fast_graph** out) {
  return guarded([&] {
    if (ds == nullptr || cfg == nullptr || out == nullptr)
      throw fast::InvalidParameterError("fast_graph_build: null argument");
    const auto& p = cfg->cfg.pipeline;
    auto g = std::make_unique<fast_graph>();
    g->graph = fast::build_graph_auto(ds->data, p.graph.knn_scales, p.graph.sigma_min_factor);
    g->spectrum = fast::laplacian_spectrum(g->graph);
    Eigen::Index nonzero = 0;
    for (Eigen::Index i = 0; i < g->spectrum.size(); ++i)
      if (g->spectrum(i) > 1e-8) ++nonzero;
    const Eigen::Index want = std::min<Eigen::Index>(p.embed_dim, nonzero);
    g->embedding = fast::spectral_embed(g->graph, want);
    *out = g.release();
  });
}

int64_t fast_graph_nodes(const fast_graph* g) { return g ? g->graph.n_nodes : 0; }

int64_t fast_graph_edge_count(const fast_graph* g) {
  if (g == nullptr) return 0;
  return g->graph.adjacency.nonZeros() / 2;
}

fast_status fast_graph_edges(const fast_graph* g, int64_t* rows, int64_t* cols, double* weights) {
  return guarded([&] {
    if (g == nullptr || rows == nullptr || cols == nullptr || weights == nullptr)
      throw fast::InvalidParameterError("fast_graph_edges: null argument");
    int64_t k = 0;
    for (int col = 0; col < g->graph.adjacency.outerSize(); ++col)
      for (Eigen::SparseMatrix<double>::InnerIterator it(g->graph.adjacency, col); it; ++it)
        if (it.row() < it.col()) {
          rows[k] = it.row();
          cols[k] = it.col();
          weights[k] = it.value();
          ++k;
        }
  });
}

int64_t fast_graph_embed_dim(const fast_graph* g) { return g ? g->embedding.dim() : 0; }

fast_status fast_graph_eigenvalues(const fast_graph* g, double* out) {
  return guarded([&] {
    if (g == nullptr || out == nullptr)
      throw fast::InvalidParameterError("fast_graph_eigenvalues: null argument");
    for (Eigen::Index i = 0; i < g->spectrum.size(); ++i) out[i] = g->spectrum(i);
  });
}

fast_status fast_graph_embedding(const fast_graph* g, double* out) {
  return guarded([&] {
    if (g == nullptr || out == nullptr)
      throw fast::InvalidParameterError("fast_graph_embedding: null argument");
    const auto& f = g->embedding.features;
    for (Eigen::Index r = 0; r < f.rows(); ++r)
      for (Eigen::Index c = 0; c < f.cols(); ++c) out[r * f.cols() + c] = f(r, c);
  });
}

void fast_graph_free(fast_graph* g) { delete g; }

/* ---- selection --------------------------------------------------------- */

fast_status fast_select(const fast_dataset* ds, const fast_config* cfg, fast_selection** out) {
  return guarded([&] {
    if (ds == nullptr || cfg == nullptr || out == nullptr)
      throw fast::InvalidParameterError("fast_select: null argument");
    *out = new fast_selection{fast::run_pipeline(ds->data, cfg->cfg.pipeline)};
  });
}

fast_status fast_select_with_embedding(const fast_dataset* ds, const fast_config* cfg,
                                       const double* embedding, int64_t d, fast_selection** out) {
  return guarded([&] {
    if (ds == nullptr || cfg == nullptr || embedding == nullptr || out == nullptr)
      throw fast::InvalidParameterError("fast_select_with_embedding: null argument");
    if (d < 1) throw fast::InvalidParameterError("fast_select_with_embedding: bad dimension");
    Eigen::MatrixXd emb(ds->data.rows(), d);
    for (Eigen::Index r = 0; r < emb.rows(); ++r)
      for (Eigen::Index c = 0; c < d; ++c) emb(r, c) = embedding[r * d + c];
    *out = new fast_selection{
        fast::run_pipeline_with_embedding(ds->data, cfg->cfg.pipeline, emb)};
  });
}

int64_t fast_selection_count(const fast_selection* sel) {
  return sel ? static_cast<int64_t>(sel->result.indices.size()) : 0;
}

fast_status fast_selection_indices(const fast_selection* sel, int64_t* out) {
  return guarded([&] {
    if (sel == nullptr || out == nullptr)
      throw fast::InvalidParameterError("fast_selection_indices: null argument");
    std::memcpy(out, sel->result.indices.data(),
                sel->result.indices.size() * sizeof(int64_t));
  });
}

double fast_selection_ecfd(const fast_selection* sel) {
  return sel ? sel->result.ecfd_report : 0.0;
}

int32_t fast_selection_stratified(const fast_selection* sel) {
  return sel && sel->result.stratified ? 1 : 0;
}

int32_t fast_selection_unit_count(const fast_selection* sel) {
  return sel ? static_cast<int32_t>(sel->result.class_runs.size()) : 0;
}

namespace {
const fast::ClassRun* unit_at(const fast_selection* sel, int32_t unit) {
  if (sel == nullptr || unit < 0 ||
      unit >= static_cast<int32_t>(sel->result.class_runs.size()))
    throw fast::InvalidParameterError("selection: unit index out of range");
  return &sel->result.class_runs[static_cast<std::size_t>(unit)];
}
}  // namespace

int32_t fast_selection_unit_class(const fast_selection* sel, int32_t unit) {
  try {
    return unit_at(sel, unit)->class_id;
  } catch (...) {
    return -1;
  }
}

int64_t fast_selection_unit_selected(const fast_selection* sel, int32_t unit) {
  try {
    return unit_at(sel, unit)->n_selected;
  } catch (...) {
    return 0;
  }
}

int64_t fast_selection_trace_rows(const fast_selection* sel, int32_t unit) {
  try {
    return static_cast<int64_t>(unit_at(sel, unit)->loss_trace.size());
  } catch (...) {
    return 0;
  }
}

fast_status fast_selection_trace(const fast_selection* sel, int32_t unit, double* out) {
  return guarded([&] {
    if (out == nullptr) throw fast::InvalidParameterError("fast_selection_trace: null argument");
    const fast::ClassRun* run = unit_at(sel, unit);
    for (std::size_t i = 0; i < run->loss_trace.size(); ++i) {
      const auto& b = run->loss_trace[i];
      double* row = out + 7 * i;
      row[0] = static_cast<double>(i);
      row[1] = b.main;
      row[2] = b.div;
      row[3] = b.match;
      row[4] = b.graph;
      row[5] = b.total;
      row[6] = i < run->tau_trace.size() ? run->tau_trace[i] : 0.0;
    }
  });
}

int64_t fast_selection_library_text(const fast_selection* sel, int32_t unit, char* buf,
                                    int64_t cap) {
  try {
    return copy_text(unit_at(sel, unit)->library_audit, buf, cap);
  } catch (...) {
    return 0;
  }
}

fast_status fast_selection_timings(const fast_selection* sel, double* out) {
  return guarded([&] {
    if (sel == nullptr || out == nullptr)
      throw fast::InvalidParameterError("fast_selection_timings: null argument");
    const auto& t = sel->result.timings;
    out[0] = t.graph_s;
    out[1] = t.embed_s;
    out[2] = t.afl_s;
    out[3] = t.optimize_s;
    out[4] = t.extract_s;
    out[5] = t.total();
  });
}

fast_status fast_selection_final_losses(const fast_selection* sel, double* out) {
  return guarded([&] {
    if (sel == nullptr || out == nullptr)
      throw fast::InvalidParameterError("fast_selection_final_losses: null argument");
    const auto& b = sel->result.final_losses;
    out[0] = b.main;
    out[1] = b.div;
    out[2] = b.match;
    out[3] = b.graph;
    out[4] = b.total;
  });
}

void fast_selection_free(fast_selection* sel) { delete sel; }

/* ---- evaluation -------------------------------------------------------- */

fast_status fast_evaluate(const fast_dataset* ds, const fast_config* cfg, const int64_t* indices,
                          int64_t count, fast_eval** out) {
  return guarded([&] {
    if (ds == nullptr || cfg == nullptr || indices == nullptr || out == nullptr)
      throw fast::InvalidParameterError("fast_evaluate: null argument");
    *out = new fast_eval{fast::evaluate(
        ds->data, cfg->cfg, std::span<const std::int64_t>(indices, static_cast<std::size_t>(count)))};
  });
}

double fast_eval_ecfd_fast(const fast_eval* ev) { return ev ? ev->report.ecfd_fast : 0.0; }

double fast_eval_ecfd_random_median(const fast_eval* ev) {
  return ev ? ev->report.ecfd_random_median : 0.0;
}

int32_t fast_eval_random_count(const fast_eval* ev) {
  return ev ? static_cast<int32_t>(ev->report.ecfd_random.size()) : 0;
}

fast_status fast_eval_ecfd_random(const fast_eval* ev, double* out) {
  return guarded([&] {
    if (ev == nullptr || out == nullptr)
      throw fast::InvalidParameterError("fast_eval_ecfd_random: null argument");
    for (std::size_t i = 0; i < ev->report.ecfd_random.size(); ++i)
      out[i] = ev->report.ecfd_random[i];
  });
}

fast_status fast_eval_moment_errors(const fast_eval* ev, double* sel4, double* rand4) {
  return guarded([&] {
    if (ev == nullptr || sel4 == nullptr || rand4 == nullptr)
      throw fast::InvalidParameterError("fast_eval_moment_errors: null argument");
    for (int i = 0; i < 4; ++i) {
      sel4[i] = ev->report.moment_err_fast[static_cast<std::size_t>(i)];
      rand4[i] = ev->report.moment_err_random[static_cast<std::size_t>(i)];
    }
  });
}

int32_t fast_eval_strategy_count(const fast_eval* ev) {
  return ev ? static_cast<int32_t>(ev->report.strategies.size()) : 0;
}

fast_status fast_eval_strategy(const fast_eval* ev, int32_t idx, char* name_buf, int64_t name_cap,
                               int32_t* iterations, double* final_ecfd, double* threshold) {
  return guarded([&] {
    if (ev == nullptr || idx < 0 || idx >= static_cast<int32_t>(ev->report.strategies.size()))
      throw fast::InvalidParameterError("fast_eval_strategy: index out of range");
    const auto& s = ev->report.strategies[static_cast<std::size_t>(idx)];
    if (name_buf != nullptr) copy_text(fast::strategy_name(s.strategy), name_buf, name_cap);
    if (iterations != nullptr) *iterations = s.reached ? s.iterations : -1;
    if (final_ecfd != nullptr) *final_ecfd = s.final_ecfd;
    if (threshold != nullptr) *threshold = s.threshold;
  });
}

void fast_eval_free(fast_eval* ev) { delete ev; }

}  // extern "C"
