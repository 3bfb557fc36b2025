#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "fast/errors.hpp"
#include "fast/manifold_graph.hpp"
#include "support/oracles.hpp"
#include "support/synth.hpp"

using namespace fast;

namespace {

DatasetMatrix line_points() {
  Eigen::MatrixXd values(3, 1);
  values << 0.0, 1.0, 3.0;
  return DatasetMatrix::create(values);
}

}  // namespace

TEST_CASE("knn_search on collinear points") {
  const auto table = knn_search(line_points(), 2);
  CHECK(table.indices(0, 0) == 1);
  CHECK(table.distances(0, 0) == doctest::Approx(1.0));
  CHECK(table.indices(0, 1) == 2);
  CHECK(table.distances(0, 1) == doctest::Approx(3.0));
}

TEST_CASE("knn_search with duplicate points reports zero distance") {
  Eigen::MatrixXd values(2, 2);
  values << 1.0, 2.0, 1.0, 2.0;
  const auto table = knn_search(DatasetMatrix::create(values), 1);
  CHECK(table.distances(0, 0) == doctest::Approx(0.0));
  CHECK(table.indices(0, 0) == 1);
}

TEST_CASE("knn_search matches the exhaustive oracle") {
  const Eigen::MatrixXd points = synth::random_matrix(100, 5, 42);
  const auto table = knn_search(DatasetMatrix::create(points), 10);
  Eigen::MatrixXi want_idx;
  Eigen::MatrixXd want_dist;
  oracle::knn(points, 10, want_idx, want_dist);
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    for (int c = 0; c < 10; ++c) {
      CHECK(table.distances(i, c) == doctest::Approx(want_dist(i, c)).epsilon(1e-9));
      CHECK(table.indices(i, c) == want_idx(i, c));
    }
}

TEST_CASE("knn_search rejects k >= N") {
  CHECK_THROWS_AS(knn_search(line_points(), 3), InvalidParameterError);
  CHECK_THROWS_AS(knn_search(line_points(), 0), InvalidParameterError);
}

TEST_CASE("knn_search self is never a neighbor and distances ascend") {
  const Eigen::MatrixXd points = synth::random_matrix(60, 3, 7);
  const auto table = knn_search(DatasetMatrix::create(points), 12);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (int c = 0; c < 12; ++c) {
      CHECK(table.indices(i, c) != static_cast<int>(i));
      if (c > 0) CHECK(table.distances(i, c) >= table.distances(i, c - 1));
      CHECK(table.distances(i, c) >= 0.0);
    }
  }
}

TEST_CASE("solve_local_scale root matches the bisection oracle") {
  Eigen::VectorXd dists(4);
  dists << 1.0, 2.0, 3.0, 4.0;
  const auto scale = solve_local_scale(dists, 1e-6);
  CHECK(scale.rho == doctest::Approx(1.0));
  const double want = oracle::local_scale_root(dists, std::log2(4.0));
  CHECK(scale.sigma == doctest::Approx(want).epsilon(1e-3));
  CHECK(scale.sigma == doctest::Approx(1.64).epsilon(0.01));
  // residual contract
  double sum = 0.0;
  for (int j = 0; j < 4; ++j) sum += std::exp(-std::max(0.0, dists(j) - 1.0) / scale.sigma);
  CHECK(std::abs(sum - 2.0) < 1e-5);
}

TEST_CASE("solve_local_scale saturates for k=2") {
  Eigen::VectorXd dists(2);
  dists << 1.0, 2.0;
  const auto scale = solve_local_scale(dists, 1e-3);
  CHECK(scale.rho == doctest::Approx(1.0));
  CHECK(scale.sigma == doctest::Approx(1e-3));
}

TEST_CASE("solve_local_scale saturates when all distances are equal") {
  Eigen::VectorXd dists(4);
  dists << 5.0, 5.0, 5.0, 5.0;
  const auto scale = solve_local_scale(dists, 1e-3);
  CHECK(scale.rho == doctest::Approx(5.0));
  CHECK(scale.sigma == doctest::Approx(1e-3));
}

TEST_CASE("solve_local_scale residual is small whenever a root exists") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 4 + static_cast<int>(rng.index(8));
    Eigen::VectorXd dists(k);
    double acc = 0.1 + rng.uniform();
    for (int j = 0; j < k; ++j) {
      dists(j) = acc;
      acc += 0.05 + rng.uniform();
    }
    const auto scale = solve_local_scale(dists, 1e-9);
    if (scale.sigma > 1e-9) {
      double sum = 0.0;
      for (int j = 0; j < k; ++j)
        sum += std::exp(-std::max(0.0, dists(j) - scale.rho) / scale.sigma);
      CHECK(std::abs(sum - std::log2(static_cast<double>(k))) < 1e-5);
    }
  }
}

TEST_CASE("directed_weights evaluates the membership kernel") {
  const Eigen::MatrixXd points = synth::random_matrix(20, 2, 3);
  const DatasetMatrix data = DatasetMatrix::create(points);
  const auto table = knn_search(data, 5);
  std::vector<LocalScale> scales;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    scales.push_back(solve_local_scale(table.distances.row(i).transpose(), 1e-9));
  const auto a = directed_weights(table, scales);

  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    // nearest neighbor always gets weight exp(0) = 1
    CHECK(a.coeff(i, table.indices(i, 0)) == doctest::Approx(1.0));
    // d = rho + sigma evaluates to 1/e
    const double d = scales[static_cast<std::size_t>(i)].rho +
                     scales[static_cast<std::size_t>(i)].sigma;
    const double w = std::exp(-std::max(0.0, d - scales[static_cast<std::size_t>(i)].rho) /
                              scales[static_cast<std::size_t>(i)].sigma);
    CHECK(w == doctest::Approx(std::exp(-1.0)));
  }
  // sparsity: entries outside the k-list are structural zeros
  int nnz_row0 = 0;
  for (Eigen::SparseMatrix<double>::InnerIterator it(
           Eigen::SparseMatrix<double>(a.transpose()), 0);
       it; ++it)
    ++nnz_row0;
  CHECK(nnz_row0 == 5);
}

TEST_CASE("fuzzy_union scalar cases") {
  CHECK(fuzzy_union(0.5, 0.5) == doctest::Approx(0.75));
  CHECK(fuzzy_union(1.0, 0.3) == doctest::Approx(1.0));
  CHECK(fuzzy_union(0.0, 0.3) == doctest::Approx(0.3));
  CHECK_THROWS_AS(fuzzy_union(-0.1, 0.5), InvalidParameterError);
  CHECK_THROWS_AS(fuzzy_union(0.1, 1.5), InvalidParameterError);
}

TEST_CASE("fuzzy_union is commutative, associative and monotone") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const double a = rng.uniform(), b = rng.uniform(), c = rng.uniform();
    CHECK(fuzzy_union(a, b) == doctest::Approx(fuzzy_union(b, a)).epsilon(1e-12));
    CHECK(fuzzy_union(fuzzy_union(a, b), c) ==
          doctest::Approx(fuzzy_union(a, fuzzy_union(b, c))).epsilon(1e-12));
    const double bigger = std::min(1.0, a + 0.1 * rng.uniform());
    CHECK(fuzzy_union(bigger, b) >= fuzzy_union(a, b) - 1e-12);
    CHECK(fuzzy_union(a, b) >= 0.0);
    CHECK(fuzzy_union(a, b) <= 1.0);
  }
}

TEST_CASE("build_multiscale_graph repairs two far clusters into one component") {
  const Eigen::MatrixXd points = synth::two_blobs(40, 9, 100.0);
  const DatasetMatrix data = DatasetMatrix::create(points);

  // pre-repair graph: fuse scale {3} without MST
  const auto table = knn_search(data, 3);
  std::vector<LocalScale> scales;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    scales.push_back(solve_local_scale(table.distances.row(i).transpose(), 1e-9));
  const auto a = directed_weights(table, scales);
  const auto sym = fuzzy_union(a, Eigen::SparseMatrix<double>(a.transpose()));
  const auto pre = ManifoldGraph::from_adjacency(sym);
  CHECK(oracle::component_count(Eigen::MatrixXd(pre.adjacency)) == 2);
  CHECK(pre.component_count() == 2);

  const auto graph = build_multiscale_graph(data, {3});
  CHECK(graph.component_count() == 1);
  CHECK(oracle::component_count(Eigen::MatrixXd(graph.adjacency)) == 1);
}

TEST_CASE("graph invariants: symmetry, zero diagonal, range") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const Eigen::MatrixXd points = synth::random_matrix(50, 3, seed);
    const auto graph = build_multiscale_graph(DatasetMatrix::create(points), {4, 7});
    const Eigen::MatrixXd b(graph.adjacency);
    CHECK((b - b.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(b.diagonal().cwiseAbs().maxCoeff() == 0.0);
    CHECK(b.minCoeff() >= 0.0);
    CHECK(b.maxCoeff() <= 1.0);
    CHECK((graph.degrees.array() > 0.0).all());
  }
}

TEST_CASE("build_multiscale_graph rejects bad scale sets") {
  const Eigen::MatrixXd points = synth::random_matrix(10, 2, 1);
  CHECK_THROWS_AS(build_multiscale_graph(DatasetMatrix::create(points), {}),
                  InvalidParameterError);
  CHECK_THROWS_AS(build_multiscale_graph(DatasetMatrix::create(points), {10}),
                  InvalidParameterError);
  CHECK_THROWS_AS(build_multiscale_graph(DatasetMatrix::create(points), {1}),
                  InvalidParameterError);
}

TEST_CASE("clip_scales clamps to the dataset size") {
  CHECK(clip_scales({10, 15, 30}, 12) == std::vector<int>{10, 11});
  CHECK(clip_scales({10, 15, 30}, 100) == std::vector<int>{10, 15, 30});
  CHECK_THROWS_AS(clip_scales({5}, 2), InvalidParameterError);
}

TEST_CASE("mst_union inserts the missing bridge edge for 3 collinear points") {
  const DatasetMatrix data = line_points();
  std::vector<Eigen::Triplet<double>> trips{{0, 1, 0.8}, {1, 0, 0.8}};
  Eigen::SparseMatrix<double> b(3, 3);
  b.setFromTriplets(trips.begin(), trips.end());
  const auto graph = ManifoldGraph::from_adjacency(b);
  CHECK(graph.component_count() == 2);

  const auto repaired = mst_union(graph, data);
  CHECK(repaired.component_count() == 1);
  // oracle: MST of {0,1,3} on a line keeps (0,1) and adds (1,2)
  CHECK(repaired.adjacency.coeff(1, 2) > 0.0);
  CHECK(repaired.adjacency.coeff(0, 2) == 0.0);
  // inserted weight is the smallest positive existing entry
  CHECK(repaired.adjacency.coeff(1, 2) == doctest::Approx(0.8));
  // existing weights untouched
  CHECK(repaired.adjacency.coeff(0, 1) == doctest::Approx(0.8));
}

TEST_CASE("mst_union is idempotent") {
  const Eigen::MatrixXd points = synth::two_blobs(30, 17, 50.0);
  const DatasetMatrix data = DatasetMatrix::create(points);
  const auto graph = build_multiscale_graph(data, {3});
  const auto again = mst_union(graph, data);
  CHECK(Eigen::MatrixXd(graph.adjacency - again.adjacency).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mst_union always yields one component") {
  for (std::uint64_t seed : {21ULL, 22ULL, 23ULL}) {
    const Eigen::MatrixXd points = synth::random_matrix(40, 4, seed, 3.0);
    const auto graph = build_multiscale_graph(DatasetMatrix::create(points), {3});
    CHECK(graph.component_count() == 1);
  }
}

TEST_CASE("spectral_embed on the 2-node graph") {
  std::vector<Eigen::Triplet<double>> trips{{0, 1, 1.0}, {1, 0, 1.0}};
  Eigen::SparseMatrix<double> b(2, 2);
  b.setFromTriplets(trips.begin(), trips.end());
  const auto graph = ManifoldGraph::from_adjacency(b);

  const Eigen::MatrixXd lap(graph.laplacian);
  CHECK(lap(0, 0) == doctest::Approx(1.0));
  CHECK(lap(0, 1) == doctest::Approx(-1.0));

  const auto emb = spectral_embed(graph, 1);
  CHECK(emb.eigenvalues(0) == doctest::Approx(2.0).epsilon(1e-10));
  // eigenvector (1,-1)/sqrt(2) with the sign fixed positive-first
  CHECK(std::abs(emb.features(0, 0)) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(emb.features(0, 0) * emb.features(1, 0) < 0.0);
  CHECK(emb.features.col(0).maxCoeff() > 0.0);

  CHECK_THROWS_AS(spectral_embed(graph, 2), InvalidParameterError);
}

TEST_CASE("build_graph_auto covers the 2-node MST-only case") {
  Eigen::MatrixXd two(2, 1);
  two << 0.0, 1.0;
  const auto graph = build_graph_auto(DatasetMatrix::create(two), {10, 15, 30});
  CHECK(graph.component_count() == 1);
  CHECK(graph.adjacency.coeff(0, 1) == doctest::Approx(1.0));
  const Eigen::VectorXd spectrum = laplacian_spectrum(graph);
  REQUIRE(spectrum.size() == 2);
  CHECK(std::abs(spectrum(0)) <= 1e-10);
  CHECK(spectrum(1) == doctest::Approx(2.0).epsilon(1e-10));

  // and the normal path still routes through the clipped scales
  const Eigen::MatrixXd points = synth::random_matrix(20, 2, 71);
  const auto normal = build_graph_auto(DatasetMatrix::create(points), {10, 15, 30});
  CHECK(normal.component_count() == 1);
  CHECK(laplacian_spectrum(normal).size() == 20);
}

TEST_CASE("spectral_embed excludes the null space of a connected graph") {
  const Eigen::MatrixXd points = synth::random_matrix(30, 2, 31);
  const auto graph = build_multiscale_graph(DatasetMatrix::create(points), {4});
  const auto emb = spectral_embed(graph, 5);
  CHECK((emb.eigenvalues.array() > 1e-8).all());
  // the excluded null vector is proportional to D^{1/2} 1
  Eigen::VectorXd null_vec = graph.degrees.array().sqrt();
  null_vec.normalize();
  for (Eigen::Index c = 0; c < emb.features.cols(); ++c)
    CHECK(std::abs(null_vec.dot(emb.features.col(c))) < 1e-6);
}

TEST_CASE("spectral_embed matches the circulant spectrum of a ring") {
  const auto graph = ManifoldGraph::from_adjacency(synth::ring_adjacency(8));
  const auto emb = spectral_embed(graph, 7);
  // ring eigenvalues 1 - cos(2 pi m / 8), m = 1..7, sorted ascending
  std::vector<double> want;
  for (int m = 1; m < 8; ++m) want.push_back(1.0 - std::cos(2.0 * std::numbers::pi * m / 8.0));
  std::sort(want.begin(), want.end());
  for (Eigen::Index i = 0; i < 7; ++i)
    CHECK(std::abs(emb.eigenvalues(i) - want[static_cast<std::size_t>(i)]) < 1e-8);
}

TEST_CASE("zero-eigenvalue multiplicity equals the component count before repair") {
  const Eigen::MatrixXd points = synth::two_blobs(40, 9, 100.0);
  const DatasetMatrix data = DatasetMatrix::create(points);
  const auto table = knn_search(data, 3);
  std::vector<LocalScale> scales;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    scales.push_back(solve_local_scale(table.distances.row(i).transpose(), 1e-9));
  const auto a = directed_weights(table, scales);
  const auto pre =
      ManifoldGraph::from_adjacency(fuzzy_union(a, Eigen::SparseMatrix<double>(a.transpose())));
  REQUIRE(pre.component_count() == 2);

  const auto zero_multiplicity = [](const ManifoldGraph& g) {
    Eigen::MatrixXd lap(g.laplacian);
    lap = 0.5 * (lap + lap.transpose());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap, Eigen::EigenvaluesOnly);
    int zeros = 0;
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i)
      if (solver.eigenvalues()(i) <= 1e-8) ++zeros;
    return zeros;
  };
  CHECK(zero_multiplicity(pre) == 2);
  const auto post = mst_union(pre, data);
  CHECK(zero_multiplicity(post) == 1);
}

TEST_CASE("spectral invariants hold on random datasets") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Eigen::MatrixXd points = synth::random_matrix(60, 3, 100 + seed);
    const auto graph = build_multiscale_graph(DatasetMatrix::create(points), {5, 9});

    Eigen::MatrixXd lap(graph.laplacian);
    lap = 0.5 * (lap + lap.transpose());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
    CHECK(solver.eigenvalues().minCoeff() >= -1e-8);
    CHECK(solver.eigenvalues().maxCoeff() <= 2.0 + 1e-8);
    // connected graph: zero eigenvalue has multiplicity 1
    int zeros = 0;
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i)
      if (solver.eigenvalues()(i) <= 1e-8) ++zeros;
    CHECK(zeros == 1);

    const auto emb = spectral_embed(graph, 8);
    for (Eigen::Index c = 0; c < emb.features.cols(); ++c) {
      CHECK(emb.features.col(c).norm() == doctest::Approx(1.0).epsilon(1e-10));
      const double resid =
          (lap * emb.features.col(c) - emb.eigenvalues(c) * emb.features.col(c)).norm();
      CHECK(resid < 1e-6);
    }
  }
}
