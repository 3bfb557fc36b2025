// Independent reference implementations used to freeze expected values.
// Everything here is deliberately brute-force and separate from the library
// code paths it checks.

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace oracle {

// Exhaustive kNN from the full pairwise distance matrix.
inline void knn(const Eigen::MatrixXd& points, int k, Eigen::MatrixXi& indices,
                Eigen::MatrixXd& distances) {
  const Eigen::Index n = points.rows();
  indices.resize(n, k);
  distances.resize(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<std::pair<double, Eigen::Index>> all;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      all.emplace_back((points.row(i) - points.row(j)).norm(), j);
    }
    std::sort(all.begin(), all.end());
    for (int c = 0; c < k; ++c) {
      distances(i, c) = all[static_cast<std::size_t>(c)].first;
      indices(i, c) = static_cast<int>(all[static_cast<std::size_t>(c)].second);
    }
  }
}

// Bisection on sum_j exp(-max(0, d_j - rho)/sigma) = target over a wide
// bracket; returns NaN when no root exists above the tiny end.
inline double local_scale_root(const Eigen::VectorXd& dists, double target) {
  const double rho = dists(0);
  auto f = [&](double sigma) {
    double s = 0.0;
    for (Eigen::Index j = 0; j < dists.size(); ++j)
      s += std::exp(-std::max(0.0, dists(j) - rho) / sigma);
    return s - target;
  };
  double lo = 1e-9, hi = 1e9;
  if (f(lo) >= 0.0) return std::numeric_limits<double>::quiet_NaN();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Connected components by BFS over a dense nonzero pattern.
inline int component_count(const Eigen::MatrixXd& adjacency) {
  const Eigen::Index n = adjacency.rows();
  std::vector<int> comp(static_cast<std::size_t>(n), -1);
  int count = 0;
  for (Eigen::Index s = 0; s < n; ++s) {
    if (comp[static_cast<std::size_t>(s)] != -1) continue;
    std::vector<Eigen::Index> stack{s};
    comp[static_cast<std::size_t>(s)] = count;
    while (!stack.empty()) {
      const Eigen::Index u = stack.back();
      stack.pop_back();
      for (Eigen::Index v = 0; v < n; ++v)
        if (adjacency(u, v) != 0.0 && comp[static_cast<std::size_t>(v)] == -1) {
          comp[static_cast<std::size_t>(v)] = count;
          stack.push_back(v);
        }
    }
    ++count;
  }
  return count;
}

// Minimal injective-assignment cost by exhaustive enumeration (M, N small).
inline double assignment_min_cost(const Eigen::MatrixXd& cost) {
  const Eigen::Index m = cost.rows();
  const Eigen::Index n = cost.cols();
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  double best = std::numeric_limits<double>::infinity();
  // full enumeration; partial sums are no bound when costs can be negative
  std::function<void(Eigen::Index, double)> rec = [&](Eigen::Index row, double acc) {
    if (row == m) {
      best = std::min(best, acc);
      return;
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      used[static_cast<std::size_t>(j)] = 1;
      rec(row + 1, acc + cost(row, j));
      used[static_cast<std::size_t>(j)] = 0;
    }
  };
  rec(0, 0.0);
  return best;
}

// ECF by direct complex arithmetic.
inline std::complex<double> ecf(const Eigen::MatrixXd& points, const Eigen::VectorXd& omega) {
  std::complex<double> acc(0.0, 0.0);
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    acc += std::exp(std::complex<double>(0.0, points.row(i).dot(omega)));
  return acc / static_cast<double>(points.rows());
}

// Naive ECFD term by term.
inline double cfd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                  const Eigen::MatrixXd& omegas) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < omegas.rows(); ++j)
    acc += std::norm(ecf(a, omegas.row(j).transpose()) - ecf(b, omegas.row(j).transpose()));
  return acc / static_cast<double>(omegas.rows());
}

// Central finite differences of a scalar loss over a matrix argument.
inline Eigen::MatrixXd fd_gradient(const std::function<double(const Eigen::MatrixXd&)>& loss,
                                   const Eigen::MatrixXd& at, double h = 1e-5) {
  Eigen::MatrixXd grad(at.rows(), at.cols());
  Eigen::MatrixXd work = at;
  for (Eigen::Index r = 0; r < at.rows(); ++r)
    for (Eigen::Index c = 0; c < at.cols(); ++c) {
      work(r, c) = at(r, c) + h;
      const double up = loss(work);
      work(r, c) = at(r, c) - h;
      const double down = loss(work);
      work(r, c) = at(r, c);
      grad(r, c) = (up - down) / (2.0 * h);
    }
  return grad;
}

inline double rel_error(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
  const double denom = std::max(want.norm(), 1e-12);
  return (got - want).norm() / denom;
}

// Raw sample moment E[prod_j x_j^{alpha_j}].
inline double sample_moment(const Eigen::MatrixXd& points, const std::vector<int>& order) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    double term = 1.0;
    for (Eigen::Index j = 0; j < points.cols(); ++j)
      term *= std::pow(points(i, j), order[static_cast<std::size_t>(j)]);
    acc += term;
  }
  return acc / static_cast<double>(points.rows());
}

}  // namespace oracle
