// Deterministic synthetic datasets for tests and benchmarks.

#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fast/rng.hpp"

namespace synth {

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                                     double scale = 1.0) {
  fast::Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
  return m;
}

struct GmmSpec {
  Eigen::RowVector2d mean;
  double sigma;
  double weight;
};

// 3-component 2-D mixture with distinct means and spreads; labels are the
// component ids.
inline Eigen::MatrixXd gmm3(Eigen::Index n, std::uint64_t seed,
                            std::vector<std::int32_t>* labels = nullptr) {
  const GmmSpec spec[3] = {
      {{0.0, 0.0}, 0.6, 0.5},
      {{4.0, 1.0}, 0.8, 0.3},
      {{1.5, -3.5}, 0.5, 0.2},
  };
  fast::Rng rng(seed);
  Eigen::MatrixXd out(n, 2);
  if (labels != nullptr) labels->clear();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = rng.uniform();
    int c = u < spec[0].weight ? 0 : (u < spec[0].weight + spec[1].weight ? 1 : 2);
    out(i, 0) = spec[c].mean(0) + spec[c].sigma * rng.normal();
    out(i, 1) = spec[c].mean(1) + spec[c].sigma * rng.normal();
    if (labels != nullptr) labels->push_back(c);
  }
  return out;
}

// Two well-separated 2-D blobs, half the rows in each.
inline Eigen::MatrixXd two_blobs(Eigen::Index n, std::uint64_t seed, double separation = 10.0) {
  fast::Rng rng(seed);
  Eigen::MatrixXd out(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double cx = (i < n / 2) ? 0.0 : separation;
    out(i, 0) = cx + rng.normal();
    out(i, 1) = rng.normal();
  }
  return out;
}

// 1-D lognormal (skewed) sample.
inline Eigen::MatrixXd lognormal_1d(Eigen::Index n, std::uint64_t seed, double mu = 0.0,
                                    double sigma = 0.8) {
  fast::Rng rng(seed);
  Eigen::MatrixXd out(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) out(i, 0) = std::exp(mu + sigma * rng.normal());
  return out;
}

// Ring adjacency with unit weights (closed-form circulant spectrum).
inline Eigen::SparseMatrix<double> ring_adjacency(Eigen::Index n) {
  std::vector<Eigen::Triplet<double>> trips;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index j = (i + 1) % n;
    trips.emplace_back(i, j, 1.0);
    trips.emplace_back(j, i, 1.0);
  }
  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(trips.begin(), trips.end());
  return a;
}

}  // namespace synth
