#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fast/config.hpp"
#include "fast/dataset.hpp"

namespace fast {

struct StrategyOutcome {
  FreqStrategy strategy = FreqStrategy::pdas;
  bool reached = false;
  int iterations = -1;  // first iteration at or below the threshold
  double final_ecfd = 0.0;
  double threshold = 0.0;
};

struct EvalReport {
  double ecfd_fast = 0.0;
  double ecfd_random_median = 0.0;
  std::vector<double> ecfd_random;                 // one per baseline seed
  std::array<double, 4> moment_err_fast{};         // raw marginal moments, orders 1-4
  std::array<double, 4> moment_err_random{};       // median over baseline subsets
  std::vector<StrategyOutcome> strategies;         // empty when disabled
};

/// Per-iteration held-out ECFD of the continuous coreset against the
/// reference embedding, for one frequency-selection strategy. Early stopping
/// is disabled so strategies are compared over the same horizon.
std::vector<double> strategy_ecfd_trace(const SpectralEmbedding& embedding,
                                        const Eigen::VectorXd& degrees,
                                        const Eigen::SparseMatrix<double>& laplacian,
                                        const PipelineConfig& cfg, FreqStrategy strategy,
                                        std::uint64_t seed);

/// Iterations-to-threshold comparison across strategies on one dataset,
/// sharing a single graph/embedding build. The threshold is 1.5x the pdas
/// run's final held-out ECFD.
std::vector<StrategyOutcome> compare_strategies(const DatasetMatrix& data,
                                                const PipelineConfig& cfg, std::uint64_t seed);

/// Dimension-averaged relative errors of raw marginal moments (orders 1-4)
/// of the subset rows against the full rows.
std::array<double, 4> moment_errors(const Eigen::MatrixXd& full, const Eigen::MatrixXd& subset);

/// Held-out ECFD of a subset against the full set in standardized raw space.
double subset_ecfd(const Eigen::MatrixXd& full, std::span<const std::int64_t> indices,
                   int n_freqs, std::uint64_t seed);

/// Full evaluation: selection-vs-random distributional statistics on
/// held-out frequencies, plus the strategy comparison when enabled.
EvalReport evaluate(const DatasetMatrix& data, const Config& cfg,
                    std::span<const std::int64_t> indices);

}  // namespace fast
