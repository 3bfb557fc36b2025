#include "fast/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>

#include "fast/errors.hpp"
#include "fast/rng.hpp"

namespace fast {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int quota(double ratio, Eigen::Index n) {
  return std::max(1, static_cast<int>(std::lround(ratio * static_cast<double>(n))));
}

struct UnitOutcome {
  std::vector<Eigen::Index> local_indices;
  ClassRun run;
};

/// Classes too small for a graph: take the rows closest to the class mean.
UnitOutcome degenerate_unit(const Eigen::MatrixXd& rows, int m, std::int32_t class_id) {
  UnitOutcome out;
  out.run.class_id = class_id;
  out.run.n_rows = rows.rows();
  if (m >= rows.rows()) {
    for (Eigen::Index i = 0; i < rows.rows(); ++i) out.local_indices.push_back(i);
  } else {
    const Eigen::RowVectorXd mean = rows.colwise().mean();
    std::vector<std::pair<double, Eigen::Index>> order;
    for (Eigen::Index i = 0; i < rows.rows(); ++i)
      order.emplace_back((rows.row(i) - mean).squaredNorm(), i);
    std::stable_sort(order.begin(), order.end());
    for (int i = 0; i < m; ++i) out.local_indices.push_back(order[static_cast<std::size_t>(i)].second);
    std::sort(out.local_indices.begin(), out.local_indices.end());
  }
  out.run.n_selected = static_cast<Eigen::Index>(out.local_indices.size());
  return out;
}

UnitOutcome run_unit(const Eigen::MatrixXd& rows, const PipelineConfig& cfg,
                     std::int32_t class_id, std::uint64_t unit_seed,
                     const Eigen::MatrixXd* preset_embedding, StageTimings& timings) {
  const Eigen::Index n = rows.rows();
  const int m = quota(cfg.ratio, n);

  if (m >= n) {
    UnitOutcome out;
    out.run.class_id = class_id;
    out.run.n_rows = n;
    for (Eigen::Index i = 0; i < n; ++i) out.local_indices.push_back(i);
    out.run.n_selected = n;
    return out;
  }
  if (n < 3) {
    std::cerr << "fast: class " << class_id << " has " << n
              << " rows; selecting without a graph\n";
    return degenerate_unit(rows, m, class_id);
  }

  const DatasetMatrix sub = DatasetMatrix::create(rows);

  auto t0 = Clock::now();
  const std::vector<int> scales = clip_scales(cfg.graph.knn_scales, n);
  const ManifoldGraph graph = build_multiscale_graph(sub, scales, cfg.graph.sigma_min_factor);
  timings.graph_s += seconds_since(t0);

  t0 = Clock::now();
  SpectralEmbedding embedding;
  if (preset_embedding != nullptr) {
    if (preset_embedding->rows() != n)
      throw InvalidParameterError("preset embedding row count does not match dataset");
    embedding.features = *preset_embedding;
  } else {
    const Eigen::Index want = std::min<Eigen::Index>(cfg.embed_dim, n - 1);
    embedding = spectral_embed(graph, want);
  }
  // Unit-norm eigenvector columns have per-dimension spread ~ 1/sqrt(N);
  // the optimization works in a sqrt(N)-scaled copy so feature std is O(1)
  // and absolute knobs (step size, amplitude floor) keep their meaning at
  // any dataset size.
  embedding.features *= std::sqrt(static_cast<double>(n));
  timings.embed_s += seconds_since(t0);

  const Eigen::MatrixXd& reference = embedding.features;

  t0 = Clock::now();
  CoresetState state =
      init_coreset(embedding, graph.degrees, graph.laplacian, m, unit_seed, cfg.opt.cost_eps);

  // AFL: band thresholds from a pilot draw, per-band scale ascent, library.
  const Eigen::VectorXd pilot = pilot_scales(reference);
  const BandThresholds thresholds =
      band_thresholds(pilot, cfg.afl.pilot_samples, derive_seed(unit_seed, "pilot"));

  Eigen::MatrixXd afl_reference = reference;
  if (reference.rows() > cfg.afl.ref_cap) {
    Rng rng(derive_seed(unit_seed, "afl-ref"));
    afl_reference.resize(cfg.afl.ref_cap, reference.cols());
    for (Eigen::Index i = 0; i < cfg.afl.ref_cap; ++i)
      afl_reference.row(i) =
          reference.row(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));
  }
  const Eigen::VectorXd s_low =
      optimize_band_scales(afl_reference, state.y_tilde, Band::low, thresholds, pilot,
                           cfg.penalty, cfg.afl, derive_seed(unit_seed, "afl-low"));
  const Eigen::VectorXd s_mid =
      optimize_band_scales(afl_reference, state.y_tilde, Band::mid, thresholds, pilot,
                           cfg.penalty, cfg.afl, derive_seed(unit_seed, "afl-mid"));
  const Eigen::VectorXd s_high =
      optimize_band_scales(afl_reference, state.y_tilde, Band::high, thresholds, pilot,
                           cfg.penalty, cfg.afl, derive_seed(unit_seed, "afl-high"));

  FrequencyLibrary library =
      build_library(s_low, s_mid, s_high, thresholds, cfg.afl.n_lib, cfg.afl.split_low,
                    cfg.afl.split_mid, derive_seed(unit_seed, "library"), cfg.afl.reject_factor);
  attach_reference_cache(library, reference);
  timings.afl_s += seconds_since(t0);

  t0 = Clock::now();
  OptimContext ctx{embedding, graph.degrees, graph.laplacian, library,
                   make_schedule(library, cfg.opt.ramp_fraction, cfg.opt.total_iters),
                   RffMap::build(cfg.opt.rff_dim, static_cast<int>(reference.cols()),
                                 median_pairwise_distance(reference, derive_seed(unit_seed, "bw")),
                                 derive_seed(unit_seed, "rff"))};

  const int window = 50;
  for (int t = 0; t < cfg.opt.total_iters; ++t) {
    step(state, cfg.opt, cfg.penalty, ctx, derive_seed(unit_seed, "step", t));
    if (cfg.opt.early_stop_rel > 0.0 && state.iteration >= 2 * window) {
      const auto& trace = state.loss_trace;
      double prev = 0.0, recent = 0.0;
      for (int i = 0; i < window; ++i) {
        prev += trace[trace.size() - 2 * window + i].total;
        recent += trace[trace.size() - window + i].total;
      }
      prev /= window;
      recent /= window;
      if ((prev - recent) / std::max(std::abs(prev), 1e-12) < cfg.opt.early_stop_rel) break;
    }
  }
  timings.optimize_s += seconds_since(t0);

  t0 = Clock::now();
  ExtractResult extracted = extract(state, embedding, graph.degrees, cfg.opt.cost_eps,
                                    cfg.heldout_freqs, derive_seed(unit_seed, "extract"));
  timings.extract_s += seconds_since(t0);

  UnitOutcome out;
  out.local_indices = std::move(extracted.indices);
  out.run.class_id = class_id;
  out.run.n_rows = n;
  out.run.n_selected = static_cast<Eigen::Index>(out.local_indices.size());
  out.run.heldout_ecfd = extracted.heldout_ecfd;
  out.run.loss_trace = std::move(state.loss_trace);
  out.run.tau_trace = std::move(state.tau_trace);
  out.run.library_audit = library.audit_text();
  return out;
}

SelectionResult assemble(std::vector<UnitOutcome> outcomes,
                         const std::vector<std::vector<Eigen::Index>>& global_rows,
                         bool stratified, StageTimings timings) {
  SelectionResult result;
  result.stratified = stratified;
  result.timings = timings;

  double weight_total = 0.0;
  double ecfd_acc = 0.0;
  LossBreakdown merged;
  for (std::size_t u = 0; u < outcomes.size(); ++u) {
    auto& o = outcomes[u];
    for (Eigen::Index local : o.local_indices)
      result.indices.push_back(
          static_cast<std::int64_t>(global_rows[u][static_cast<std::size_t>(local)]));
    if (stratified)
      result.per_class_counts.emplace_back(o.run.class_id,
                                           static_cast<std::int64_t>(o.local_indices.size()));
    const double w = static_cast<double>(o.run.n_rows);
    weight_total += w;
    ecfd_acc += w * o.run.heldout_ecfd;
    if (!o.run.loss_trace.empty()) {
      const LossBreakdown& last = o.run.loss_trace.back();
      merged.main += w * last.main;
      merged.div += w * last.div;
      merged.match += w * last.match;
      merged.graph += w * last.graph;
      merged.total += w * last.total;
    }
    result.class_runs.push_back(std::move(o.run));
  }
  if (weight_total > 0.0) {
    result.ecfd_report = ecfd_acc / weight_total;
    merged.main /= weight_total;
    merged.div /= weight_total;
    merged.match /= weight_total;
    merged.graph /= weight_total;
    merged.total /= weight_total;
    result.final_losses = merged;
  }
  std::sort(result.indices.begin(), result.indices.end());
  if (std::adjacent_find(result.indices.begin(), result.indices.end()) != result.indices.end())
    throw NumericError("run_pipeline: duplicate global indices after merge");
  return result;
}

}  // namespace

SelectionResult run_pipeline(const DatasetMatrix& data, const PipelineConfig& cfg) {
  if (cfg.ratio <= 0.0 || cfg.ratio > 1.0)
    throw InvalidParameterError("run_pipeline: ratio must lie in (0, 1]");

  StageTimings timings;
  std::vector<UnitOutcome> outcomes;
  std::vector<std::vector<Eigen::Index>> global_rows;

  const bool stratified = cfg.use_stratified(data);
  if (stratified) {
    const std::int32_t classes = data.label_count();
    for (std::int32_t c = 0; c < classes; ++c) {
      std::vector<Eigen::Index> rows = data.class_rows(c);
      Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()), data.dims());
      for (std::size_t i = 0; i < rows.size(); ++i)
        sub.row(static_cast<Eigen::Index>(i)) = data.values.row(rows[i]);
      if (rows.size() < 2) {
        std::cerr << "fast: class " << c << " has fewer than 2 samples; keeping all of it\n";
        UnitOutcome keep;
        keep.run.class_id = c;
        keep.run.n_rows = static_cast<Eigen::Index>(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
          keep.local_indices.push_back(static_cast<Eigen::Index>(i));
        keep.run.n_selected = static_cast<Eigen::Index>(keep.local_indices.size());
        outcomes.push_back(std::move(keep));
      } else {
        outcomes.push_back(run_unit(sub, cfg, c,
                                    derive_seed(cfg.seed, "class", static_cast<std::uint64_t>(c)),
                                    nullptr, timings));
      }
      global_rows.push_back(std::move(rows));
    }
  } else {
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(data.rows()));
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<Eigen::Index>(i);
    outcomes.push_back(run_unit(data.values, cfg, -1, cfg.seed, nullptr, timings));
    global_rows.push_back(std::move(rows));
  }
  return assemble(std::move(outcomes), global_rows, stratified, timings);
}

SelectionResult run_pipeline_with_embedding(const DatasetMatrix& data, const PipelineConfig& cfg,
                                            const Eigen::MatrixXd& embedding) {
  if (cfg.use_stratified(data))
    throw InvalidParameterError("embedding reuse is only supported for global (unstratified) runs");
  if (cfg.ratio <= 0.0 || cfg.ratio > 1.0)
    throw InvalidParameterError("run_pipeline: ratio must lie in (0, 1]");

  StageTimings timings;
  std::vector<UnitOutcome> outcomes;
  std::vector<std::vector<Eigen::Index>> global_rows;
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(data.rows()));
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<Eigen::Index>(i);
  outcomes.push_back(run_unit(data.values, cfg, -1, cfg.seed, &embedding, timings));
  global_rows.push_back(std::move(rows));
  return assemble(std::move(outcomes), global_rows, false, timings);
}

}  // namespace fast
