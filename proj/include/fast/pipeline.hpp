#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fast/dataset.hpp"
#include "fast/optimizer.hpp"

namespace fast {

/// Everything needed to run selection end to end.
struct PipelineConfig {
  GraphConfig graph;
  AflConfig afl;
  PhasePenaltyParams penalty;
  OptimConfig opt;
  double ratio = 0.1;
  int embed_dim = 32;        // capped at the number of available eigenpairs
  int stratified = -1;       // -1 auto (labels present), 0 off, 1 on
  int heldout_freqs = 256;
  std::uint64_t seed = 0;

  bool use_stratified(const DatasetMatrix& data) const {
    if (stratified == 0) return false;
    if (stratified == 1 && !data.has_labels()) return false;
    return data.has_labels();
  }
};

struct StageTimings {
  double graph_s = 0.0;
  double embed_s = 0.0;
  double afl_s = 0.0;
  double optimize_s = 0.0;
  double extract_s = 0.0;
  double total() const { return graph_s + embed_s + afl_s + optimize_s + extract_s; }
};

/// Per-optimization-unit artifacts kept for emission (one unit per class in
/// stratified mode, a single unit otherwise).
struct ClassRun {
  std::int32_t class_id = 0;          // -1 for the global unit
  Eigen::Index n_rows = 0;
  Eigen::Index n_selected = 0;
  double heldout_ecfd = 0.0;
  std::vector<LossBreakdown> loss_trace;
  std::vector<double> tau_trace;
  std::string library_audit;
};

struct SelectionResult {
  std::vector<std::int64_t> indices;  // sorted global row ids
  LossBreakdown final_losses;         // sample-weighted across units
  double ecfd_report = 0.0;           // sample-weighted held-out ECFD
  std::vector<std::pair<std::int32_t, std::int64_t>> per_class_counts;
  std::vector<ClassRun> class_runs;
  StageTimings timings;
  bool stratified = false;
};

/// Full pipeline: graph -> embedding -> AFL -> optimization -> extraction,
/// run per class when stratified. Classes with fewer than 3 rows skip the
/// graph stage and contribute their most central rows (all rows when the
/// quota covers them).
SelectionResult run_pipeline(const DatasetMatrix& data, const PipelineConfig& cfg);

/// Same pipeline reusing a precomputed embedding (global mode only); the
/// graph is still rebuilt for degrees and the Laplacian.
SelectionResult run_pipeline_with_embedding(const DatasetMatrix& data, const PipelineConfig& cfg,
                                            const Eigen::MatrixXd& embedding);

}  // namespace fast
