#include "fast/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fast/errors.hpp"
#include "fast/rng.hpp"

namespace fast {

namespace {

Eigen::MatrixXd standardized(const Eigen::MatrixXd& full) {
  const Eigen::RowVectorXd mean = full.colwise().mean();
  const Eigen::RowVectorXd std_dev =
      ((full.rowwise() - mean).array().square().colwise().sum() /
       static_cast<double>(std::max<Eigen::Index>(full.rows() - 1, 1)))
          .sqrt();
  Eigen::MatrixXd out = full.rowwise() - mean;
  for (Eigen::Index j = 0; j < out.cols(); ++j) out.col(j) /= (std_dev(j) + 1e-12);
  return out;
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, std::span<const std::int64_t> idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

std::vector<std::int64_t> random_subset(Eigen::Index n, std::size_t m, std::uint64_t seed) {
  std::vector<std::int64_t> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), 0);
  Rng rng(seed);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + rng.index(ids.size() - i);
    std::swap(ids[i], ids[j]);
  }
  ids.resize(m);
  return ids;
}

}  // namespace

std::array<double, 4> moment_errors(const Eigen::MatrixXd& full, const Eigen::MatrixXd& subset) {
  std::array<double, 4> out{};
  for (int p = 1; p <= 4; ++p) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < full.cols(); ++j) {
      const double m_full = full.col(j).array().pow(p).mean();
      const double m_sub = subset.col(j).array().pow(p).mean();
      acc += std::abs(m_sub - m_full) / (std::abs(m_full) + 1e-12);
    }
    out[static_cast<std::size_t>(p - 1)] = acc / static_cast<double>(full.cols());
  }
  return out;
}

double subset_ecfd(const Eigen::MatrixXd& full, std::span<const std::int64_t> indices,
                   int n_freqs, std::uint64_t seed) {
  const Eigen::MatrixXd std_full = standardized(full);
  const Eigen::MatrixXd sel = take_rows(std_full, indices);
  Rng rng(derive_seed(seed, "eval-heldout"));
  Eigen::MatrixXd omegas(n_freqs, full.cols());
  for (Eigen::Index i = 0; i < omegas.rows(); ++i)
    for (Eigen::Index j = 0; j < omegas.cols(); ++j) omegas(i, j) = rng.normal();
  return cfd_naive(sel, std_full, omegas);
}

std::vector<double> strategy_ecfd_trace(const SpectralEmbedding& embedding,
                                        const Eigen::VectorXd& degrees,
                                        const Eigen::SparseMatrix<double>& laplacian,
                                        const PipelineConfig& cfg, FreqStrategy strategy,
                                        std::uint64_t seed) {
  const Eigen::Index n = embedding.features.rows();
  const int m = std::max(1, static_cast<int>(std::lround(cfg.ratio * static_cast<double>(n))));
  const Eigen::MatrixXd& reference = embedding.features;

  CoresetState state = init_coreset(embedding, degrees, laplacian, m, seed, cfg.opt.cost_eps);

  const Eigen::VectorXd pilot = pilot_scales(reference);
  const BandThresholds thresholds =
      band_thresholds(pilot, cfg.afl.pilot_samples, derive_seed(seed, "pilot"));
  const Eigen::VectorXd s_low =
      optimize_band_scales(reference, state.y_tilde, Band::low, thresholds, pilot, cfg.penalty,
                           cfg.afl, derive_seed(seed, "afl-low"));
  const Eigen::VectorXd s_mid =
      optimize_band_scales(reference, state.y_tilde, Band::mid, thresholds, pilot, cfg.penalty,
                           cfg.afl, derive_seed(seed, "afl-mid"));
  const Eigen::VectorXd s_high =
      optimize_band_scales(reference, state.y_tilde, Band::high, thresholds, pilot, cfg.penalty,
                           cfg.afl, derive_seed(seed, "afl-high"));
  FrequencyLibrary library =
      build_library(s_low, s_mid, s_high, thresholds, cfg.afl.n_lib, cfg.afl.split_low,
                    cfg.afl.split_mid, derive_seed(seed, "library"), cfg.afl.reject_factor);
  attach_reference_cache(library, reference);

  OptimConfig opt = cfg.opt;
  opt.strategy = strategy;
  opt.early_stop_rel = 0.0;

  OptimContext ctx{embedding, degrees, laplacian, library,
                   make_schedule(library, opt.ramp_fraction, opt.total_iters),
                   RffMap::build(opt.rff_dim, static_cast<int>(reference.cols()),
                                 median_pairwise_distance(reference, derive_seed(seed, "bw")),
                                 derive_seed(seed, "rff"))};

  // The trace frequencies depend only on the seed so every strategy is
  // measured against the same held-out set.
  const Eigen::MatrixXd trace_freqs =
      heldout_frequencies(reference, 128, derive_seed(seed, "trace"));

  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(opt.total_iters));
  for (int t = 0; t < opt.total_iters; ++t) {
    step(state, opt, cfg.penalty, ctx, derive_seed(seed, "step", t));
    trace.push_back(cfd_naive(state.y_tilde, reference, trace_freqs));
  }
  return trace;
}

std::vector<StrategyOutcome> compare_strategies(const DatasetMatrix& data,
                                                const PipelineConfig& cfg, std::uint64_t seed) {
  const std::vector<int> scales = clip_scales(cfg.graph.knn_scales, data.rows());
  const ManifoldGraph graph = build_multiscale_graph(data, scales, cfg.graph.sigma_min_factor);
  const Eigen::Index want = std::min<Eigen::Index>(cfg.embed_dim, data.rows() - 1);
  const SpectralEmbedding embedding = spectral_embed(graph, want);

  const FreqStrategy order[] = {FreqStrategy::pdas, FreqStrategy::uniform, FreqStrategy::topk,
                                FreqStrategy::collinear};
  std::vector<std::vector<double>> traces;
  for (FreqStrategy s : order)
    traces.push_back(
        strategy_ecfd_trace(embedding, graph.degrees, graph.laplacian, cfg, s, seed));

  const double threshold = 1.5 * traces[0].back();
  std::vector<StrategyOutcome> out;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    StrategyOutcome o;
    o.strategy = order[i];
    o.threshold = threshold;
    o.final_ecfd = traces[i].back();
    for (std::size_t t = 0; t < traces[i].size(); ++t) {
      if (traces[i][t] <= threshold) {
        o.reached = true;
        o.iterations = static_cast<int>(t) + 1;
        break;
      }
    }
    out.push_back(o);
  }
  return out;
}

EvalReport evaluate(const DatasetMatrix& data, const Config& cfg,
                    std::span<const std::int64_t> indices) {
  if (indices.empty()) throw InvalidParameterError("evaluate: empty index set");
  for (std::int64_t id : indices)
    if (id < 0 || id >= data.rows())
      throw InvalidParameterError("evaluate: index out of range: " + std::to_string(id));

  EvalReport report;
  const std::uint64_t seed = cfg.eval.seed;
  report.ecfd_fast = subset_ecfd(data.values, indices, cfg.eval.heldout_freqs, seed);
  report.moment_err_fast = moment_errors(data.values, take_rows(data.values, indices));

  std::vector<std::array<double, 4>> random_moments;
  for (int s = 0; s < cfg.eval.n_random; ++s) {
    const auto subset = random_subset(data.rows(), indices.size(),
                                      derive_seed(seed, "random-subset", static_cast<std::uint64_t>(s)));
    report.ecfd_random.push_back(
        subset_ecfd(data.values, subset, cfg.eval.heldout_freqs, seed));
    random_moments.push_back(moment_errors(data.values, take_rows(data.values, subset)));
  }
  report.ecfd_random_median = median(report.ecfd_random);
  for (int p = 0; p < 4; ++p) {
    std::vector<double> errs;
    for (const auto& m : random_moments) errs.push_back(m[static_cast<std::size_t>(p)]);
    report.moment_err_random[static_cast<std::size_t>(p)] = median(errs);
  }

  if (cfg.eval.run_strategies)
    report.strategies = compare_strategies(data, cfg.pipeline, derive_seed(seed, "strategies"));
  return report;
}

}  // namespace fast
