#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "fast/cf_core.hpp"

namespace fast {

enum class Band { low, mid, high };

const char* band_name(Band b);

/// One library frequency with its cached per-frequency loss.
struct FrequencyAtom {
  Eigen::VectorXd omega;
  double norm = 0.0;
  Band band = Band::low;
  double score = 0.0;  // last L_CF(omega) seen by the sampler
};

/// Norm boundaries separating the low/mid/high bands.
struct BandThresholds {
  double low_mid = 0.0;
  double mid_high = 0.0;
  Band classify(double norm) const {
    if (norm < low_mid) return Band::low;
    if (norm < mid_high) return Band::mid;
    return Band::high;
  }
};

/// Anisotropic frequency library: banded atoms drawn from per-band
/// N(0, diag(s^2)) with rejection by norm. The reference-ECF cache is filled
/// once per run (the reference never moves) so score refreshes only pay for
/// the coreset side.
struct FrequencyLibrary {
  std::vector<FrequencyAtom> atoms;
  BandThresholds thresholds;
  Eigen::VectorXd scale_low, scale_mid, scale_high;
  std::uint64_t rng_seed = 0;
  Eigen::VectorXd ref_re, ref_im;  // empty until attached

  Eigen::Index dim() const { return scale_low.size(); }
  bool has_reference_cache() const { return ref_re.size() > 0; }
  double min_norm() const;
  double max_norm() const;

  /// Frequencies of the given atoms stacked as rows.
  Eigen::MatrixXd omegas(const std::vector<int>& ids) const;

  /// Audit dump: one atom per line "band norm w_1 ... w_d".
  std::string audit_text() const;
};

/// Norm curriculum: tau ramps linearly from tau_low to tau_max over
/// ramp_fraction * total_iters iterations, then stays flat.
struct CurriculumSchedule {
  double tau_low = 1.0;
  double tau_max = 1.0;
  double ramp_fraction = 0.6;
  int total_iters = 1000;
};

struct AflConfig {
  int n_lib = 300;
  double split_low = 0.4;
  double split_mid = 0.4;  // high band gets the remainder
  int n_mc = 256;          // Monte-Carlo samples per objective estimate
  int n_opt = 30;          // ascent steps per band
  int pilot_samples = 2048;
  Eigen::Index ref_cap = 1024;  // reference rows used by scale optimization
  double ascent_step = 0.25;
  double scale_min_factor = 0.05;  // clamp relative to the initial scales
  double scale_max_factor = 8.0;
  int reject_factor = 1000;  // rejection budget multiplier per band
};

enum class FreqStrategy { pdas, uniform, topk, collinear };

const char* strategy_name(FreqStrategy s);
FreqStrategy strategy_from_name(const std::string& name);

/// Per-dimension pilot scales: reciprocal standard deviation of the
/// reference rows (CF arguments live in reciprocal data units).
Eigen::VectorXd pilot_scales(const Eigen::MatrixXd& reference);

/// 33rd/67th percentiles of |omega| under a pilot draw with the given
/// per-dimension scales.
BandThresholds band_thresholds(const Eigen::VectorXd& pilot, int pilot_samples,
                               std::uint64_t seed);

/// Maximizes the Monte-Carlo estimate of E[L_CF(t) | t in band] over
/// t ~ N(0, diag(s^2)) by projected ascent on log-scales with
/// finite-difference gradients. Falls back to isotropic scales centered in
/// the band when the initial scales reject every draw.
Eigen::VectorXd optimize_band_scales(const Eigen::MatrixXd& reference,
                                     const Eigen::MatrixXd& init_coreset, Band band,
                                     const BandThresholds& thresholds,
                                     const Eigen::VectorXd& init_scales,
                                     const PhasePenaltyParams& penalty, const AflConfig& cfg,
                                     std::uint64_t seed);

/// Draws the banded library (default split 40/40/20) with rejection by norm.
/// Deterministic given seed; throws naming the band when the rejection
/// budget is exhausted.
FrequencyLibrary build_library(const Eigen::VectorXd& scale_low, const Eigen::VectorXd& scale_mid,
                               const Eigen::VectorXd& scale_high, const BandThresholds& thresholds,
                               int n_lib, double split_low, double split_mid, std::uint64_t seed,
                               int reject_factor = 1000);

/// Fills the per-atom reference ECF cache.
void attach_reference_cache(FrequencyLibrary& library, const Eigen::MatrixXd& reference);

/// Schedule whose bounds come from the library: tau_low is the low/mid
/// threshold (the low band is in the pool from iteration 0), tau_max the
/// largest atom norm.
CurriculumSchedule make_schedule(const FrequencyLibrary& library, double ramp_fraction,
                                 int total_iters);

double tau_at(const CurriculumSchedule& schedule, int t);

/// Atom ids with norm <= tau, ascending.
std::vector<int> pool_indices(const FrequencyLibrary& library, double tau);

/// Recomputes score = L_CF(omega) for the given atoms against the current
/// coreset, using the cached reference ECF.
void refresh_scores(FrequencyLibrary& library, const std::vector<int>& pool,
                    const Eigen::MatrixXd& coreset, const PhasePenaltyParams& penalty);

/// Sequential selection weights for the next pick: score times the diversity
/// factor 1 - max |cosine similarity| to already chosen atoms, normalized to
/// sum to 1. Falls back to uniform when every weight vanishes.
Eigen::VectorXd selection_weights(const FrequencyLibrary& library,
                                  const std::vector<int>& remaining,
                                  const std::vector<int>& chosen);

/// Progressive discrepancy-aware sampling: refreshes scores over the pool
/// C_t and draws k atoms without replacement with probability proportional
/// to score * diversity. Returns atom ids; fewer than k when |C_t| < k.
std::vector<int> pdas_sample(FrequencyLibrary& library, const CurriculumSchedule& schedule, int t,
                             int batch_k, const Eigen::MatrixXd& coreset,
                             const Eigen::MatrixXd& reference, const PhasePenaltyParams& penalty,
                             std::uint64_t seed);

/// The batch_k lowest-norm atoms, ascending by norm (the fixed aggregate
/// window of the mse metric mode).
std::vector<int> lowest_norm_atoms(const FrequencyLibrary& library, int batch_k);

/// Frequency batch for one optimizer iteration under the chosen strategy,
/// stacked as rows. pdas follows the curriculum; uniform/topk/collinear are
/// the comparison strategies of the evaluation harness.
Eigen::MatrixXd strategy_batch(FrequencyLibrary& library, FreqStrategy strategy,
                               const CurriculumSchedule& schedule, int t, int batch_k,
                               const Eigen::MatrixXd& coreset, const Eigen::MatrixXd& reference,
                               const PhasePenaltyParams& penalty, std::uint64_t seed);

}  // namespace fast
