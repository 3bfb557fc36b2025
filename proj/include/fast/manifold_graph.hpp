#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <vector>

#include "fast/dataset.hpp"

namespace fast {

/// Per-point connectivity scale: rho is the distance to the nearest
/// neighbor, sigma the membership decay solved from the smooth-kNN equation.
struct LocalScale {
  double rho = 0.0;
  double sigma = 0.0;
};

/// Exact k-nearest-neighbor table. Row i holds the k nearest rows of the
/// dataset (self excluded), distances ascending.
struct NeighborTable {
  Eigen::MatrixXi indices;    // N x k
  Eigen::MatrixXd distances;  // N x k, ascending per row
  int k() const { return static_cast<int>(indices.cols()); }
};

/// Fused fuzzy kNN graph. adjacency is symmetric with zero diagonal and
/// entries in [0,1]; laplacian is the symmetric normalized Laplacian
/// I - D^{-1/2} B D^{-1/2}.
struct ManifoldGraph {
  Eigen::Index n_nodes = 0;
  Eigen::SparseMatrix<double> adjacency;
  Eigen::VectorXd degrees;
  Eigen::SparseMatrix<double> laplacian;

  /// Validates symmetry/range/diagonal and derives degrees + laplacian.
  static ManifoldGraph from_adjacency(Eigen::SparseMatrix<double> adjacency);

  /// Connected component count of the adjacency pattern.
  int component_count() const;
};

struct SpectralEmbedding {
  Eigen::MatrixXd features;     // N x d, unit-norm eigenvector columns
  Eigen::VectorXd eigenvalues;  // ascending, all > zero tolerance
  Eigen::Index dim() const { return features.cols(); }
};

struct GraphConfig {
  std::vector<int> knn_scales{10, 15, 30};
  double sigma_min_factor = 1e-3;  // times mean nearest-neighbor distance
};

/// Exact brute-force kNN over Euclidean row distances. 1 <= k < N.
NeighborTable knn_search(const DatasetMatrix& data, int k);

/// Solves sum_j exp(-max(0, d_j - rho)/sigma) = log2(k) for sigma by
/// bisection (|residual| < 1e-5), then clamps to sigma_min. Distances must
/// be ascending, length >= 2.
LocalScale solve_local_scale(const Eigen::VectorXd& neighbor_distances, double sigma_min);

/// Directed membership weights exp(-max(0, d_ij - rho_i)/sigma_i) for j in
/// i's neighbor list.
Eigen::SparseMatrix<double> directed_weights(const NeighborTable& neighbors,
                                             const std::vector<LocalScale>& scales);

/// Probabilistic t-conorm a + b - ab. Inputs must lie in [0,1].
double fuzzy_union(double a, double b);

/// Elementwise fuzzy union of two sparse matrices (union of patterns).
Eigen::SparseMatrix<double> fuzzy_union(const Eigen::SparseMatrix<double>& a,
                                        const Eigen::SparseMatrix<double>& b);

/// Scale list cleanup for a dataset of n rows: clip to n-1, drop k < 2,
/// dedupe. Throws when nothing survives.
std::vector<int> clip_scales(const std::vector<int>& scales, Eigen::Index n);

/// Full graph stage: per-scale directed weights, t-conorm symmetrization,
/// cross-scale fusion, MST connectivity repair, Laplacian.
ManifoldGraph build_multiscale_graph(const DatasetMatrix& data, const std::vector<int>& scales,
                                     double sigma_min_factor = 1e-3);

/// build_multiscale_graph with the scale set clipped to the dataset size;
/// datasets too small for any kNN scale (N = 2) get the bare MST graph.
ManifoldGraph build_graph_auto(const DatasetMatrix& data, const std::vector<int>& scales,
                               double sigma_min_factor = 1e-3);

/// Full eigenvalue spectrum of the Laplacian, ascending (zero included).
Eigen::VectorXd laplacian_spectrum(const ManifoldGraph& graph);

/// Inserts every MST edge of the complete Euclidean graph that is missing
/// from the adjacency, with weight equal to the smallest positive entry of
/// the adjacency. Result is connected.
ManifoldGraph mst_union(const ManifoldGraph& graph, const DatasetMatrix& data);

/// Prim over the complete Euclidean distance graph; returns (parent, child)
/// pairs of the n-1 tree edges.
std::vector<std::pair<Eigen::Index, Eigen::Index>> euclidean_mst(const Eigen::MatrixXd& points);

/// Dense symmetric eigendecomposition of the Laplacian; drops eigenpairs
/// with eigenvalue <= 1e-8 and returns the d smallest remaining. Eigenvector
/// signs are fixed so the largest-magnitude entry is positive.
SpectralEmbedding spectral_embed(const ManifoldGraph& graph, Eigen::Index d);

}  // namespace fast
