#include "fast/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fast/errors.hpp"
#include "fast/rng.hpp"

namespace fast {

namespace {

void refresh_assignment(CoresetState& state, const SpectralEmbedding& embedding,
                        const Eigen::VectorXd& degrees,
                        const Eigen::SparseMatrix<double>& laplacian, double cost_eps) {
  state.assignment = hungarian(cost_matrix(state.y_tilde, embedding.features, degrees, cost_eps));
  state.lap_sub = laplacian_submatrix(laplacian, state.assignment.pi);
}

void check_finite(double value, const char* term, int iteration) {
  if (!std::isfinite(value))
    throw NumericError(std::string("non-finite ") + term + " loss at iteration " +
                       std::to_string(iteration));
}

void check_finite(const Eigen::MatrixXd& grad, const char* term, int iteration) {
  if (!grad.allFinite())
    throw NumericError(std::string("non-finite ") + term + " gradient at iteration " +
                       std::to_string(iteration));
}

}  // namespace

CoresetState init_coreset(const SpectralEmbedding& embedding, const Eigen::VectorXd& degrees,
                          const Eigen::SparseMatrix<double>& laplacian, int m, std::uint64_t seed,
                          double cost_eps) {
  const Eigen::Index n = embedding.features.rows();
  if (m < 1 || m > n) throw InvalidParameterError("init_coreset: M must satisfy 1 <= M <= N");

  Rng rng(derive_seed(seed, "init"));
  std::vector<Eigen::Index> picked;
  picked.reserve(static_cast<std::size_t>(m));
  picked.push_back(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));

  Eigen::VectorXd min_dist(n);
  for (Eigen::Index j = 0; j < n; ++j)
    min_dist(j) = (embedding.features.row(j) - embedding.features.row(picked[0])).squaredNorm();

  while (static_cast<int>(picked.size()) < m) {
    Eigen::Index next = 0;
    double best = -1.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (min_dist(j) > best) {
        best = min_dist(j);
        next = j;
      }
    }
    picked.push_back(next);
    for (Eigen::Index j = 0; j < n; ++j)
      min_dist(j) = std::min(
          min_dist(j), (embedding.features.row(j) - embedding.features.row(next)).squaredNorm());
  }

  CoresetState state;
  state.y_tilde.resize(m, embedding.features.cols());
  for (int i = 0; i < m; ++i)
    state.y_tilde.row(i) = embedding.features.row(picked[static_cast<std::size_t>(i)]);
  state.adam_m = Eigen::MatrixXd::Zero(m, embedding.features.cols());
  state.adam_v = Eigen::MatrixXd::Zero(m, embedding.features.cols());
  refresh_assignment(state, embedding, degrees, laplacian, cost_eps);
  return state;
}

void step(CoresetState& state, const OptimConfig& cfg, const PhasePenaltyParams& penalty,
          OptimContext& ctx, std::uint64_t seed) {
  const int t = state.iteration;
  if (t >= ctx.schedule.total_iters)
    throw InvalidParameterError("step: iteration past total_iters");

  state.tau_trace.push_back(tau_at(ctx.schedule, t));

  // mse is the fixed-aggregate baseline: one statistic over a constant
  // low-frequency window, so it aligns the mean region and nothing else.
  const Eigen::MatrixXd omegas =
      cfg.metric == MainMetric::mse
          ? ctx.library.omegas(lowest_norm_atoms(ctx.library, cfg.batch_k))
          : strategy_batch(ctx.library, cfg.strategy, ctx.schedule, t, cfg.batch_k, state.y_tilde,
                           ctx.embedding.features, penalty, derive_seed(seed, "batch"));

  // The diversity and topology terms are sums while the main and positional
  // terms are means; the loop consumes per-element-normalized values (div
  // per row, graph per row and dimension) so one weight setting balances the
  // per-coordinate gradients at any coreset size.
  const double inv_m = 1.0 / static_cast<double>(state.y_tilde.rows());
  const double inv_md = inv_m / static_cast<double>(state.y_tilde.cols());

  LossBreakdown breakdown;
  breakdown.main = metric_loss(state.y_tilde, ctx.embedding.features, omegas, penalty, cfg.metric);
  check_finite(breakdown.main, "main", t);
  Eigen::MatrixXd grad =
      metric_loss_grad(state.y_tilde, ctx.embedding.features, omegas, penalty, cfg.metric);
  check_finite(grad, "main", t);

  if (cfg.lambda_div != 0.0) {
    Eigen::MatrixXd g_div;
    breakdown.div = inv_m * dpp_loss_grad(state.y_tilde, ctx.rff, cfg.dpp_delta, g_div);
    check_finite(breakdown.div, "div", t);
    check_finite(g_div, "div", t);
    grad += cfg.lambda_div * inv_m * g_div;
  }
  if (cfg.lambda_match != 0.0) {
    breakdown.match = match_loss(state.y_tilde, ctx.embedding.features, state.assignment);
    check_finite(breakdown.match, "match", t);
    Eigen::MatrixXd g_match =
        match_loss_grad(state.y_tilde, ctx.embedding.features, state.assignment);
    check_finite(g_match, "match", t);
    grad += cfg.lambda_match * g_match;
  }
  if (cfg.lambda_graph != 0.0) {
    breakdown.graph = inv_md * graph_loss(state.y_tilde, state.lap_sub);
    check_finite(breakdown.graph, "graph", t);
    Eigen::MatrixXd g_graph = inv_md * graph_loss_grad(state.y_tilde, state.lap_sub);
    check_finite(g_graph, "graph", t);
    grad += cfg.lambda_graph * g_graph;
  }

  breakdown.total = breakdown.main + cfg.lambda_div * breakdown.div +
                    cfg.lambda_match * breakdown.match + cfg.lambda_graph * breakdown.graph;
  state.loss_trace.push_back(breakdown);

  // adaptive-moment update with bias correction
  state.adam_m = cfg.adam_beta1 * state.adam_m + (1.0 - cfg.adam_beta1) * grad;
  state.adam_v =
      cfg.adam_beta2 * state.adam_v.array() + (1.0 - cfg.adam_beta2) * grad.array().square();
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, t + 1);
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, t + 1);
  state.y_tilde.array() -=
      cfg.step_size * (state.adam_m.array() / bc1) /
      ((state.adam_v.array() / bc2).sqrt() + cfg.adam_eps);

  ++state.iteration;
  if (cfg.assign_cadence > 0 && state.iteration % cfg.assign_cadence == 0)
    refresh_assignment(state, ctx.embedding, ctx.degrees, ctx.laplacian, cfg.cost_eps);
}

Eigen::MatrixXd heldout_frequencies(const Eigen::MatrixXd& reference, int count,
                                    std::uint64_t seed) {
  const Eigen::Index n = reference.rows();
  const Eigen::RowVectorXd mean = reference.colwise().mean();
  const Eigen::RowVectorXd var =
      (reference.rowwise() - mean).array().square().colwise().sum() /
      static_cast<double>(std::max<Eigen::Index>(n - 1, 1));
  const double mean_std = var.array().sqrt().mean();
  const double scale = 1.0 / (mean_std + 1e-9);

  Rng rng(derive_seed(seed, "heldout"));
  Eigen::MatrixXd omegas(count, reference.cols());
  for (Eigen::Index i = 0; i < omegas.rows(); ++i)
    for (Eigen::Index j = 0; j < omegas.cols(); ++j) omegas(i, j) = scale * rng.normal();
  return omegas;
}

ExtractResult extract(CoresetState& state, const SpectralEmbedding& embedding,
                      const Eigen::VectorXd& degrees, double cost_eps, int heldout_freqs,
                      std::uint64_t seed) {
  state.assignment =
      hungarian(cost_matrix(state.y_tilde, embedding.features, degrees, cost_eps));

  ExtractResult out;
  out.indices.assign(state.assignment.pi.begin(), state.assignment.pi.end());
  std::sort(out.indices.begin(), out.indices.end());
  if (!state.loss_trace.empty()) out.final_losses = state.loss_trace.back();

  const Eigen::MatrixXd omegas =
      heldout_frequencies(embedding.features, heldout_freqs, derive_seed(seed, "extract"));
  Eigen::MatrixXd selected(static_cast<Eigen::Index>(out.indices.size()),
                           embedding.features.cols());
  for (std::size_t i = 0; i < out.indices.size(); ++i)
    selected.row(static_cast<Eigen::Index>(i)) = embedding.features.row(out.indices[i]);
  out.heldout_ecfd = cfd_naive(selected, embedding.features, omegas);
  return out;
}

std::vector<Eigen::Index> extract_nearest(const CoresetState& state,
                                          const SpectralEmbedding& embedding) {
  std::vector<Eigen::Index> out;
  out.reserve(static_cast<std::size_t>(state.y_tilde.rows()));
  for (Eigen::Index i = 0; i < state.y_tilde.rows(); ++i) {
    Eigen::Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < embedding.features.rows(); ++j) {
      const double d = (state.y_tilde.row(i) - embedding.features.row(j)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    out.push_back(best);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace fast
