#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <cstdint>
#include <vector>

namespace fast {

/// Random Fourier feature map for a Gaussian kernel of the given bandwidth.
/// Directions and offsets are fixed for the whole run (seeded).
struct RffMap {
  Eigen::MatrixXd directions;  // D_rff x d, rows ~ N(0, bandwidth^-2 I)
  Eigen::VectorXd offsets;     // D_rff, uniform in [0, 2pi)
  double bandwidth = 1.0;
  std::uint64_t seed = 0;

  int n_features() const { return static_cast<int>(directions.rows()); }

  static RffMap build(int n_features, int dim, double bandwidth, std::uint64_t seed);
};

/// Injective map from coreset rows to embedding rows with minimal total cost.
struct Assignment {
  std::vector<int> pi;  // length M, values in [0, N), all distinct
  double cost = 0.0;
};

/// Median pairwise Euclidean distance (median heuristic bandwidth). Rows are
/// subsampled deterministically above max_rows.
double median_pairwise_distance(const Eigen::MatrixXd& points, std::uint64_t seed,
                                Eigen::Index max_rows = 1024);

/// psi(y) = sqrt(2/D_rff) cos(W y + b), one row per coreset row.
Eigen::MatrixXd rff_features(const Eigen::MatrixXd& coreset, const RffMap& map);

/// -log det(Psi Psi^T + delta I) via an SPD factorization.
double dpp_loss(const Eigen::MatrixXd& features, double delta);

/// dpp_loss plus its gradient with respect to the coreset, chained through
/// the feature map.
double dpp_loss_grad(const Eigen::MatrixXd& coreset, const RffMap& map, double delta,
                     Eigen::MatrixXd& grad_out);

/// C[i,j] = |y_i - v_j|^2 / (deg(v_j) + eps).
Eigen::MatrixXd cost_matrix(const Eigen::MatrixXd& coreset, const Eigen::MatrixXd& embedding,
                            const Eigen::VectorXd& degrees, double eps);

/// Exact rectangular assignment (M <= N) minimizing total cost; ties broken
/// toward the lowest column index.
Assignment hungarian(const Eigen::MatrixXd& cost);

/// (1/M) sum_i |y_i - V[pi(i)]|^2, with gradient (2/M)(y_i - V[pi(i)]).
double match_loss(const Eigen::MatrixXd& coreset, const Eigen::MatrixXd& embedding,
                  const Assignment& assignment);
Eigen::MatrixXd match_loss_grad(const Eigen::MatrixXd& coreset, const Eigen::MatrixXd& embedding,
                                const Assignment& assignment);

/// Dense M x M principal submatrix of the Laplacian indexed by pi.
Eigen::MatrixXd laplacian_submatrix(const Eigen::SparseMatrix<double>& laplacian,
                                    const std::vector<int>& pi);

/// Tr(Y^T L_sub Y), with gradient 2 L_sub Y (L_sub symmetric).
double graph_loss(const Eigen::MatrixXd& coreset, const Eigen::MatrixXd& lap_sub);
Eigen::MatrixXd graph_loss_grad(const Eigen::MatrixXd& coreset, const Eigen::MatrixXd& lap_sub);

}  // namespace fast
