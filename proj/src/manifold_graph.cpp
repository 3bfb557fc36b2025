#include "fast/manifold_graph.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "fast/errors.hpp"
#include "fast/parallel.hpp"

namespace fast {

namespace {

constexpr double kZeroEigTol = 1e-8;
constexpr double kSigmaFloor = 1e-12;

double residual(const Eigen::VectorXd& d, double rho, double sigma, double target) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < d.size(); ++j)
    sum += std::exp(-std::max(0.0, d(j) - rho) / sigma);
  return sum - target;
}

}  // namespace

NeighborTable knn_search(const DatasetMatrix& data, int k) {
  const Eigen::Index n = data.rows();
  if (k < 1 || k >= n)
    throw InvalidParameterError("knn_search: k must satisfy 1 <= k < N");

  NeighborTable table;
  table.indices.resize(n, k);
  table.distances.resize(n, k);

  const Eigen::MatrixXd& x = data.values;
  const Eigen::VectorXd sq = x.rowwise().squaredNorm();

  parallel_for(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end) {
    std::vector<std::pair<double, Eigen::Index>> order(n - 1);
    for (std::size_t ii = begin; ii < end; ++ii) {
      const auto i = static_cast<Eigen::Index>(ii);
      Eigen::VectorXd d2 = sq.array() + sq(i) - 2.0 * (x * x.row(i).transpose()).array();
      std::size_t m = 0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        order[m++] = {std::max(0.0, d2(j)), j};
      }
      std::partial_sort(order.begin(), order.begin() + k, order.end());
      for (int c = 0; c < k; ++c) {
        table.indices(i, c) = static_cast<int>(order[c].second);
        table.distances(i, c) = std::sqrt(order[c].first);
      }
    }
  });
  return table;
}

LocalScale solve_local_scale(const Eigen::VectorXd& neighbor_distances, double sigma_min) {
  const Eigen::Index k = neighbor_distances.size();
  if (k < 2) throw InvalidParameterError("solve_local_scale: need at least 2 distances");
  for (Eigen::Index j = 1; j < k; ++j)
    if (neighbor_distances(j) < neighbor_distances(j - 1))
      throw InvalidParameterError("solve_local_scale: distances must be ascending");

  sigma_min = std::max(sigma_min, kSigmaFloor);
  LocalScale out;
  out.rho = neighbor_distances(0);

  const double target = std::log2(static_cast<double>(k));
  // Reference length for the bracket; rho can be 0 for duplicate points.
  double ref = out.rho;
  if (ref <= 0.0) ref = neighbor_distances(k - 1);
  if (ref <= 0.0) {
    out.sigma = sigma_min;  // all distances zero: saturated
    return out;
  }

  double lo = 1e-6 * ref;
  double hi = 1e6 * ref;
  // The sum is increasing in sigma. If it already exceeds the target at the
  // lower bracket, the root lies at or below 0: saturate to sigma_min.
  if (residual(neighbor_distances, out.rho, lo, target) >= 0.0) {
    out.sigma = sigma_min;
    return out;
  }
  if (residual(neighbor_distances, out.rho, hi, target) <= 0.0) {
    out.sigma = std::max(hi, sigma_min);
    return out;
  }
  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    mid = 0.5 * (lo + hi);
    const double r = residual(neighbor_distances, out.rho, mid, target);
    if (std::abs(r) < 1e-5) break;
    if (r < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  out.sigma = std::max(mid, sigma_min);
  return out;
}

Eigen::SparseMatrix<double> directed_weights(const NeighborTable& neighbors,
                                             const std::vector<LocalScale>& scales) {
  const Eigen::Index n = neighbors.indices.rows();
  if (static_cast<Eigen::Index>(scales.size()) != n)
    throw InvalidParameterError("directed_weights: one LocalScale per row required");
  const int k = neighbors.k();

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(n) * k);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < k; ++c) {
      const double d = neighbors.distances(i, c);
      const double w = std::exp(-std::max(0.0, d - scales[i].rho) / scales[i].sigma);
      trips.emplace_back(i, neighbors.indices(i, c), w);
    }
  }
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(trips.begin(), trips.end());
  return a;
}

double fuzzy_union(double a, double b) {
  if (a < 0.0 || a > 1.0 || b < 0.0 || b > 1.0)
    throw InvalidParameterError("fuzzy_union: inputs must lie in [0,1]");
  return a + b - a * b;
}

Eigen::SparseMatrix<double> fuzzy_union(const Eigen::SparseMatrix<double>& a,
                                        const Eigen::SparseMatrix<double>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidParameterError("fuzzy_union: shape mismatch");
  // a + b - a.*b over the union pattern. cwiseProduct keeps the
  // intersection pattern, so plain sparse arithmetic does the job.
  Eigen::SparseMatrix<double> out = a + b - Eigen::SparseMatrix<double>(a.cwiseProduct(b));
  out.prune(0.0, 0.0);
  return out;
}

std::vector<int> clip_scales(const std::vector<int>& scales, Eigen::Index n) {
  std::vector<int> out;
  for (int k : scales) {
    const int clipped = std::min<int>(k, static_cast<int>(n) - 1);
    if (clipped >= 2) out.push_back(clipped);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.empty())
    throw InvalidParameterError("clip_scales: no usable kNN scale for this dataset size");
  return out;
}

ManifoldGraph ManifoldGraph::from_adjacency(Eigen::SparseMatrix<double> adjacency) {
  const Eigen::Index n = adjacency.rows();
  if (n != adjacency.cols()) throw InvalidParameterError("adjacency must be square");
  adjacency.prune(0.0, 0.0);
  adjacency.makeCompressed();

  for (int col = 0; col < adjacency.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(adjacency, col); it; ++it) {
      if (it.row() == it.col() && it.value() != 0.0)
        throw InvalidParameterError("adjacency diagonal must be zero");
      if (it.value() < 0.0 || it.value() > 1.0)
        throw InvalidParameterError("adjacency entries must lie in [0,1]");
    }
  }
  Eigen::SparseMatrix<double> diff = adjacency - Eigen::SparseMatrix<double>(adjacency.transpose());
  if (diff.coeffs().size() > 0 && diff.coeffs().abs().maxCoeff() != 0.0)
    throw InvalidParameterError("adjacency must be exactly symmetric");

  ManifoldGraph g;
  g.n_nodes = n;
  g.adjacency = std::move(adjacency);
  g.degrees = g.adjacency * Eigen::VectorXd::Ones(n);

  Eigen::VectorXd dinv(n);
  for (Eigen::Index i = 0; i < n; ++i)
    dinv(i) = g.degrees(i) > 0.0 ? 1.0 / std::sqrt(g.degrees(i)) : 0.0;

  Eigen::SparseMatrix<double> lap = -Eigen::SparseMatrix<double>(
      dinv.asDiagonal() * g.adjacency * dinv.asDiagonal());
  Eigen::SparseMatrix<double> eye(n, n);
  eye.setIdentity();
  g.laplacian = eye + lap;
  g.laplacian.makeCompressed();
  return g;
}

int ManifoldGraph::component_count() const {
  std::vector<int> comp(n_nodes, -1);
  int count = 0;
  std::vector<Eigen::Index> stack;
  for (Eigen::Index start = 0; start < n_nodes; ++start) {
    if (comp[start] != -1) continue;
    stack.push_back(start);
    comp[start] = count;
    while (!stack.empty()) {
      const Eigen::Index u = stack.back();
      stack.pop_back();
      for (Eigen::SparseMatrix<double>::InnerIterator it(adjacency, u); it; ++it) {
        const Eigen::Index v = it.row();
        if (it.value() != 0.0 && comp[v] == -1) {
          comp[v] = count;
          stack.push_back(v);
        }
      }
    }
    ++count;
  }
  return count;
}

std::vector<std::pair<Eigen::Index, Eigen::Index>> euclidean_mst(const Eigen::MatrixXd& points) {
  const Eigen::Index n = points.rows();
  std::vector<std::pair<Eigen::Index, Eigen::Index>> edges;
  if (n < 2) return edges;

  // Prim with O(N^2) distance evaluations; no distance matrix is stored.
  std::vector<char> in_tree(n, 0);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<Eigen::Index> parent(n, 0);

  in_tree[0] = 1;
  for (Eigen::Index j = 1; j < n; ++j) {
    best[j] = (points.row(j) - points.row(0)).squaredNorm();
    parent[j] = 0;
  }
  for (Eigen::Index step = 1; step < n; ++step) {
    Eigen::Index next = -1;
    double next_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!in_tree[j] && best[j] < next_d) {
        next_d = best[j];
        next = j;
      }
    }
    in_tree[next] = 1;
    edges.emplace_back(parent[next], next);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      const double d = (points.row(j) - points.row(next)).squaredNorm();
      if (d < best[j]) {
        best[j] = d;
        parent[j] = next;
      }
    }
  }
  return edges;
}

ManifoldGraph mst_union(const ManifoldGraph& graph, const DatasetMatrix& data) {
  if (graph.n_nodes != data.rows())
    throw InvalidParameterError("mst_union: graph/data size mismatch");

  double min_pos = std::numeric_limits<double>::infinity();
  for (int col = 0; col < graph.adjacency.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(graph.adjacency, col); it; ++it)
      if (it.value() > 0.0) min_pos = std::min(min_pos, it.value());
  if (!std::isfinite(min_pos)) min_pos = 1.0;  // empty graph: plain MST weights
  // Fuzzy memberships can underflow toward 0; a repair edge that weak leaves
  // the zero eigenvalue multiple within tolerance, so floor the weight while
  // keeping it far below regular edge strength.
  min_pos = std::max(min_pos, 1e-3);

  const auto tree = euclidean_mst(data.values);
  std::vector<Eigen::Triplet<double>> extra;
  for (const auto& [u, v] : tree) {
    if (graph.adjacency.coeff(u, v) == 0.0) {
      extra.emplace_back(u, v, min_pos);
      extra.emplace_back(v, u, min_pos);
    }
  }
  if (extra.empty()) return graph;

  Eigen::SparseMatrix<double> add(graph.n_nodes, graph.n_nodes);
  add.setFromTriplets(extra.begin(), extra.end());
  // MST edges are unique, so plain addition inserts them without touching
  // existing weights.
  return ManifoldGraph::from_adjacency(graph.adjacency + add);
}

ManifoldGraph build_multiscale_graph(const DatasetMatrix& data, const std::vector<int>& scales,
                                     double sigma_min_factor) {
  if (scales.empty()) throw InvalidParameterError("build_multiscale_graph: empty scale set");
  const Eigen::Index n = data.rows();
  for (int k : scales)
    if (k < 2 || k >= n)
      throw InvalidParameterError("build_multiscale_graph: scales must satisfy 2 <= k < N");

  std::vector<int> ks(scales);
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

  const int k_max = ks.back();
  const NeighborTable full = knn_search(data, k_max);
  const double mean_nn = full.distances.col(0).mean();
  const double sigma_min = std::max(sigma_min_factor * mean_nn, kSigmaFloor);

  Eigen::SparseMatrix<double> fused(n, n);
  for (int k : ks) {
    NeighborTable sub;
    sub.indices = full.indices.leftCols(k);
    sub.distances = full.distances.leftCols(k);

    std::vector<LocalScale> local(static_cast<std::size_t>(n));
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i)
        local[i] = solve_local_scale(sub.distances.row(static_cast<Eigen::Index>(i)).transpose(),
                                     sigma_min);
    });

    const Eigen::SparseMatrix<double> a = directed_weights(sub, local);
    const Eigen::SparseMatrix<double> sym =
        fuzzy_union(a, Eigen::SparseMatrix<double>(a.transpose()));
    fused = (fused.nonZeros() == 0) ? sym : fuzzy_union(fused, sym);
  }

  return mst_union(ManifoldGraph::from_adjacency(fused), data);
}

ManifoldGraph build_graph_auto(const DatasetMatrix& data, const std::vector<int>& scales,
                               double sigma_min_factor) {
  if (data.rows() == 2) {
    Eigen::SparseMatrix<double> empty(2, 2);
    return mst_union(ManifoldGraph::from_adjacency(empty), data);
  }
  return build_multiscale_graph(data, clip_scales(scales, data.rows()), sigma_min_factor);
}

Eigen::VectorXd laplacian_spectrum(const ManifoldGraph& graph) {
  Eigen::MatrixXd dense = Eigen::MatrixXd(graph.laplacian);
  dense = 0.5 * (dense + dense.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw NumericError("laplacian_spectrum: eigendecomposition failed");
  return solver.eigenvalues();
}

SpectralEmbedding spectral_embed(const ManifoldGraph& graph, Eigen::Index d) {
  const Eigen::Index n = graph.n_nodes;
  if (d < 1) throw InvalidParameterError("spectral_embed: d must be >= 1");

  Eigen::MatrixXd dense = Eigen::MatrixXd(graph.laplacian);
  dense = 0.5 * (dense + dense.transpose());  // symmetrize rounding residue
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense);
  if (solver.info() != Eigen::Success)
    throw NumericError("spectral_embed: eigendecomposition failed");

  const Eigen::VectorXd& evals = solver.eigenvalues();  // ascending
  Eigen::Index first = 0;
  while (first < n && evals(first) <= kZeroEigTol) ++first;
  const Eigen::Index available = n - first;
  if (d > available)
    throw InvalidParameterError("spectral_embed: d exceeds the number of non-zero eigenpairs");

  SpectralEmbedding emb;
  emb.features.resize(n, d);
  emb.eigenvalues.resize(d);
  for (Eigen::Index c = 0; c < d; ++c) {
    Eigen::VectorXd v = solver.eigenvectors().col(first + c);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    emb.features.col(c) = v;
    emb.eigenvalues(c) = evals(first + c);
  }
  return emb;
}

}  // namespace fast
