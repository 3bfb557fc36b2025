#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <cstdint>
#include <vector>

#include "fast/alignment.hpp"
#include "fast/cf_core.hpp"
#include "fast/freq_sampler.hpp"
#include "fast/manifold_graph.hpp"

namespace fast {

/// Optimization-loop knobs (the joint-loss weights and update schedule).
struct OptimConfig {
  int total_iters = 1000;
  double step_size = 1e-2;
  double lambda_div = 0.1;
  double lambda_match = 1.0;
  double lambda_graph = 0.5;
  int batch_k = 64;
  int assign_cadence = 10;
  double ramp_fraction = 0.6;
  double early_stop_rel = 1e-5;  // 0 disables the moving-average stop
  int rff_dim = 512;
  double dpp_delta = 1e-3;
  double cost_eps = 1e-8;
  MainMetric metric = MainMetric::pdcfd;
  FreqStrategy strategy = FreqStrategy::pdas;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

/// Continuous coreset plus its anchoring into the embedding.
struct CoresetState {
  Eigen::MatrixXd y_tilde;  // M x d
  Assignment assignment;
  int iteration = 0;
  std::vector<LossBreakdown> loss_trace;
  std::vector<double> tau_trace;

  // optimizer internals
  Eigen::MatrixXd adam_m, adam_v;
  Eigen::MatrixXd lap_sub;  // cached submatrix for the current assignment
};

/// Immutable per-class inputs shared by every step.
struct OptimContext {
  const SpectralEmbedding& embedding;
  const Eigen::VectorXd& degrees;
  const Eigen::SparseMatrix<double>& laplacian;
  FrequencyLibrary& library;
  CurriculumSchedule schedule;
  const RffMap& rff;
};

/// Greedy farthest-point seeding over the embedding rows with a seeded
/// random start; the initial assignment comes from one Hungarian solve.
CoresetState init_coreset(const SpectralEmbedding& embedding, const Eigen::VectorXd& degrees,
                          const Eigen::SparseMatrix<double>& laplacian, int m, std::uint64_t seed,
                          double cost_eps);

/// One joint-loss gradient step (adaptive-moment update), with assignment
/// refresh every assign_cadence iterations. Throws NumericError naming the
/// offending term on non-finite loss or gradient.
void step(CoresetState& state, const OptimConfig& cfg, const PhasePenaltyParams& penalty,
          OptimContext& ctx, std::uint64_t seed);

struct ExtractResult {
  std::vector<Eigen::Index> indices;  // sorted, distinct
  double heldout_ecfd = 0.0;
  LossBreakdown final_losses;
};

/// Final assignment at cadence 1; indices are the sorted image of pi. The
/// held-out ECFD compares selected embedding rows against all rows over a
/// fresh seeded batch of isotropic frequencies.
ExtractResult extract(CoresetState& state, const SpectralEmbedding& embedding,
                      const Eigen::VectorXd& degrees, double cost_eps, int heldout_freqs,
                      std::uint64_t seed);

/// Nearest-neighbor extraction (no assignment); exists for the
/// constraint-removal harness, where it exhibits index collapse.
std::vector<Eigen::Index> extract_nearest(const CoresetState& state,
                                          const SpectralEmbedding& embedding);

/// Isotropic held-out frequency batch in embedding space (scale = reciprocal
/// mean per-dimension standard deviation of the reference rows).
Eigen::MatrixXd heldout_frequencies(const Eigen::MatrixXd& reference, int count,
                                    std::uint64_t seed);

}  // namespace fast
