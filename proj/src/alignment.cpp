#include "fast/alignment.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fast/errors.hpp"
#include "fast/rng.hpp"

namespace fast {

RffMap RffMap::build(int n_features, int dim, double bandwidth, std::uint64_t seed) {
  if (n_features < 1 || dim < 1) throw InvalidParameterError("RffMap: bad shape");
  if (bandwidth <= 0.0) throw InvalidParameterError("RffMap: bandwidth must be positive");
  RffMap map;
  map.bandwidth = bandwidth;
  map.seed = seed;
  map.directions.resize(n_features, dim);
  map.offsets.resize(n_features);
  Rng rng(derive_seed(seed, "rff"));
  const double scale = 1.0 / bandwidth;
  for (int r = 0; r < n_features; ++r) {
    for (int c = 0; c < dim; ++c) map.directions(r, c) = scale * rng.normal();
    map.offsets(r) = rng.uniform() * 2.0 * std::numbers::pi;
  }
  return map;
}

double median_pairwise_distance(const Eigen::MatrixXd& points, std::uint64_t seed,
                                Eigen::Index max_rows) {
  const Eigen::Index n = points.rows();
  if (n < 2) throw InvalidParameterError("median_pairwise_distance: need at least 2 rows");

  Eigen::MatrixXd sub;
  if (n > max_rows) {
    Rng rng(derive_seed(seed, "median-heuristic"));
    sub.resize(max_rows, points.cols());
    for (Eigen::Index i = 0; i < max_rows; ++i)
      sub.row(i) = points.row(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));
  } else {
    sub = points;
  }
  const Eigen::Index m = sub.rows();
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(m) * (m - 1) / 2);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j)
      dists.push_back((sub.row(i) - sub.row(j)).norm());
  const std::size_t mid = dists.size() / 2;
  std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid), dists.end());
  return dists[mid];
}

Eigen::MatrixXd rff_features(const Eigen::MatrixXd& coreset, const RffMap& map) {
  if (coreset.cols() != map.directions.cols())
    throw InvalidParameterError("rff_features: dimension mismatch with the map");
  const double amp = std::sqrt(2.0 / map.n_features());
  Eigen::MatrixXd theta = coreset * map.directions.transpose();        // M x D_rff
  theta.rowwise() += map.offsets.transpose();
  return amp * theta.array().cos().matrix();
}

namespace {

Eigen::LLT<Eigen::MatrixXd> dpp_factor(const Eigen::MatrixXd& features, double delta) {
  if (delta <= 0.0) throw InvalidParameterError("dpp_loss: delta must be positive");
  const Eigen::Index m = features.rows();
  Eigen::MatrixXd k = features * features.transpose();
  k.diagonal().array() += delta;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success)
    throw NumericError("dpp_loss: Cholesky factorization failed on a " + std::to_string(m) +
                       "x" + std::to_string(m) + " Gram matrix");
  return llt;
}

double logdet_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

double dpp_loss(const Eigen::MatrixXd& features, double delta) {
  return -logdet_from_llt(dpp_factor(features, delta));
}

double dpp_loss_grad(const Eigen::MatrixXd& coreset, const RffMap& map, double delta,
                     Eigen::MatrixXd& grad_out) {
  const double amp = std::sqrt(2.0 / map.n_features());
  Eigen::MatrixXd theta = coreset * map.directions.transpose();
  theta.rowwise() += map.offsets.transpose();
  const Eigen::MatrixXd psi = amp * theta.array().cos().matrix();

  const auto llt = dpp_factor(psi, delta);
  const double loss = -logdet_from_llt(llt);

  // dL/dPsi = -2 K^{-1} Psi; dPsi_{ir}/dy_i = -amp sin(theta_ir) w_r.
  const Eigen::MatrixXd dl_dpsi = -2.0 * llt.solve(psi);             // M x D_rff
  const Eigen::MatrixXd chain =
      (dl_dpsi.array() * (-amp * theta.array().sin())).matrix();     // M x D_rff
  grad_out = chain * map.directions;                                 // M x d
  return loss;
}

Eigen::MatrixXd cost_matrix(const Eigen::MatrixXd& coreset, const Eigen::MatrixXd& embedding,
                            const Eigen::VectorXd& degrees, double eps) {
  if (eps <= 0.0) throw InvalidParameterError("cost_matrix: eps must be positive");
  if (coreset.cols() != embedding.cols())
    throw InvalidParameterError("cost_matrix: dimension mismatch");
  if (degrees.size() != embedding.rows())
    throw InvalidParameterError("cost_matrix: degree vector length mismatch");

  const Eigen::VectorXd y_sq = coreset.rowwise().squaredNorm();
  const Eigen::VectorXd v_sq = embedding.rowwise().squaredNorm();
  Eigen::MatrixXd c = -2.0 * coreset * embedding.transpose();
  c.colwise() += y_sq;
  c.rowwise() += v_sq.transpose();
  c = c.cwiseMax(0.0);
  const Eigen::ArrayXd denom = degrees.array() + eps;
  c.array().rowwise() /= denom.transpose();
  return c;
}

Assignment hungarian(const Eigen::MatrixXd& cost) {
  const Eigen::Index m = cost.rows();
  const Eigen::Index n = cost.cols();
  if (m > n) throw InvalidParameterError("hungarian: more rows than columns");
  if (!cost.allFinite()) throw InvalidParameterError("hungarian: costs must be finite");

  // Shortest augmenting path with potentials, one augmentation per row.
  // Columns are 1-based with a virtual column 0; scanning columns in
  // ascending order with strict comparisons breaks ties toward the lowest
  // column index.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(m) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<Eigen::Index> matched(static_cast<std::size_t>(n) + 1, 0);  // column -> row (1-based)
  std::vector<Eigen::Index> way(static_cast<std::size_t>(n) + 1, 0);

  for (Eigen::Index i = 1; i <= m; ++i) {
    matched[0] = i;
    Eigen::Index j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const Eigen::Index i0 = matched[static_cast<std::size_t>(j0)];
      double delta = inf;
      Eigen::Index j1 = -1;
      for (Eigen::Index j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (Eigen::Index j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(matched[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (matched[static_cast<std::size_t>(j0)] != 0);
    do {
      const Eigen::Index j1 = way[static_cast<std::size_t>(j0)];
      matched[static_cast<std::size_t>(j0)] = matched[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  Assignment out;
  out.pi.assign(static_cast<std::size_t>(m), -1);
  for (Eigen::Index j = 1; j <= n; ++j) {
    const Eigen::Index row = matched[static_cast<std::size_t>(j)];
    if (row > 0) out.pi[static_cast<std::size_t>(row - 1)] = static_cast<int>(j - 1);
  }
  out.cost = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) out.cost += cost(i, out.pi[static_cast<std::size_t>(i)]);
  return out;
}

double match_loss(const Eigen::MatrixXd& coreset, const Eigen::MatrixXd& embedding,
                  const Assignment& assignment) {
  const Eigen::Index m = coreset.rows();
  if (static_cast<Eigen::Index>(assignment.pi.size()) != m)
    throw InvalidParameterError("match_loss: assignment size mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    acc += (coreset.row(i) - embedding.row(assignment.pi[static_cast<std::size_t>(i)]))
               .squaredNorm();
  return acc / static_cast<double>(m);
}

Eigen::MatrixXd match_loss_grad(const Eigen::MatrixXd& coreset, const Eigen::MatrixXd& embedding,
                                const Assignment& assignment) {
  const Eigen::Index m = coreset.rows();
  Eigen::MatrixXd grad(m, coreset.cols());
  const double scale = 2.0 / static_cast<double>(m);
  for (Eigen::Index i = 0; i < m; ++i)
    grad.row(i) =
        scale * (coreset.row(i) - embedding.row(assignment.pi[static_cast<std::size_t>(i)]));
  return grad;
}

Eigen::MatrixXd laplacian_submatrix(const Eigen::SparseMatrix<double>& laplacian,
                                    const std::vector<int>& pi) {
  const Eigen::Index m = static_cast<Eigen::Index>(pi.size());
  Eigen::MatrixXd sub(m, m);
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = 0; b < m; ++b)
      sub(a, b) = laplacian.coeff(pi[static_cast<std::size_t>(a)], pi[static_cast<std::size_t>(b)]);
  return sub;
}

double graph_loss(const Eigen::MatrixXd& coreset, const Eigen::MatrixXd& lap_sub) {
  if (lap_sub.rows() != coreset.rows() || lap_sub.cols() != coreset.rows())
    throw InvalidParameterError("graph_loss: submatrix shape mismatch");
  return (coreset.transpose() * lap_sub * coreset).trace();
}

Eigen::MatrixXd graph_loss_grad(const Eigen::MatrixXd& coreset, const Eigen::MatrixXd& lap_sub) {
  return 2.0 * lap_sub * coreset;
}

}  // namespace fast
