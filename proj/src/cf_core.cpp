#include "fast/cf_core.hpp"

#include <cmath>
#include <numbers>

#include "fast/errors.hpp"

namespace fast {

namespace {

constexpr Eigen::Index kPairwiseLeaf = 4096;

Eigen::RowVectorXd pairwise_colsum(const Eigen::Ref<const Eigen::MatrixXd>& block) {
  if (block.rows() <= kPairwiseLeaf) return block.colwise().sum();
  const Eigen::Index half = block.rows() / 2;
  return pairwise_colsum(block.topRows(half)) +
         pairwise_colsum(block.bottomRows(block.rows() - half));
}

struct Tap {
  int offset;
  double weight;
};

// Central-difference stencils for derivative orders 0..4.
const std::vector<Tap>& stencil(int order) {
  static const std::vector<std::vector<Tap>> kStencils = {
      {{0, 1.0}},
      {{-1, -0.5}, {1, 0.5}},
      {{-1, 1.0}, {0, -2.0}, {1, 1.0}},
      {{-2, -0.5}, {-1, 1.0}, {1, -1.0}, {2, 0.5}},
      {{-2, 1.0}, {-1, -4.0}, {0, 6.0}, {1, -4.0}, {2, 1.0}},
  };
  return kStencils[static_cast<std::size_t>(order)];
}

}  // namespace

double ComplexCf::amplitude() const { return std::hypot(re, im); }
double ComplexCf::phase() const { return std::atan2(im, re); }

double wrap_angle(double theta) {
  const double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(theta + std::numbers::pi, two_pi);
  if (r <= 0.0) r += two_pi;
  return r - std::numbers::pi;
}

void ecf_batch(const Eigen::MatrixXd& points, const Eigen::MatrixXd& omegas, Eigen::VectorXd& re,
               Eigen::VectorXd& im) {
  if (points.rows() < 1) throw InvalidParameterError("ecf: empty point set");
  if (omegas.rows() < 1) throw InvalidParameterError("ecf: empty frequency set");
  if (points.cols() != omegas.cols())
    throw InvalidParameterError("ecf: dimension mismatch between points and frequencies");

  const Eigen::MatrixXd phases = points * omegas.transpose();  // m x K
  const double inv_m = 1.0 / static_cast<double>(points.rows());
  if (points.rows() > kPairwiseLeaf) {
    re = (pairwise_colsum(phases.array().cos().matrix()) * inv_m).transpose();
    im = (pairwise_colsum(phases.array().sin().matrix()) * inv_m).transpose();
  } else {
    re = phases.array().cos().colwise().mean().transpose();
    im = phases.array().sin().colwise().mean().transpose();
  }
}

ComplexCf ecf(const Eigen::MatrixXd& points, const Eigen::VectorXd& omega) {
  Eigen::VectorXd re, im;
  ecf_batch(points, omega.transpose(), re, im);
  return {re(0), im(0)};
}

double cfd_naive(const Eigen::MatrixXd& coreset, const Eigen::MatrixXd& reference,
                 const Eigen::MatrixXd& omegas) {
  Eigen::VectorXd re_c, im_c, re_r, im_r;
  ecf_batch(coreset, omegas, re_c, im_c);
  ecf_batch(reference, omegas, re_r, im_r);
  return ((re_c - re_r).array().square() + (im_c - im_r).array().square()).mean();
}

double pd_cf_loss(const Eigen::MatrixXd& coreset, const Eigen::MatrixXd& reference,
                  const Eigen::VectorXd& omega, const PhasePenaltyParams& penalty) {
  return main_loss(coreset, reference, omega.transpose(), penalty);
}

double main_loss(const Eigen::MatrixXd& coreset, const Eigen::MatrixXd& reference,
                 const Eigen::MatrixXd& omegas, const PhasePenaltyParams& penalty) {
  return metric_loss(coreset, reference, omegas, penalty, MainMetric::pdcfd);
}

Eigen::MatrixXd grad_main_loss(const Eigen::MatrixXd& coreset, const Eigen::MatrixXd& reference,
                               const Eigen::MatrixXd& omegas, const PhasePenaltyParams& penalty) {
  return metric_loss_grad(coreset, reference, omegas, penalty, MainMetric::pdcfd);
}

double pd_loss_from_cf(double re_c, double im_c, double re_r, double im_r, double omega_sq_norm,
                       const PhasePenaltyParams& penalty) {
  const double dre = re_r - re_c;
  const double dim = im_r - im_c;
  double term = dre * dre + dim * dim;
  const double a_c = std::hypot(re_c, im_c);
  const double a_r = std::hypot(re_r, im_r);
  if (a_c >= penalty.amp_floor && a_r >= penalty.amp_floor) {
    const double dtheta = wrap_angle(std::atan2(im_r, re_r) - std::atan2(im_c, re_c));
    term += penalty.lambda_phi(omega_sq_norm) * dtheta * dtheta;
  }
  return term;
}

double metric_loss(const Eigen::MatrixXd& coreset, const Eigen::MatrixXd& reference,
                   const Eigen::MatrixXd& omegas, const PhasePenaltyParams& penalty,
                   MainMetric metric) {
  Eigen::VectorXd re_c, im_c, re_r, im_r;
  ecf_batch(coreset, omegas, re_c, im_c);
  ecf_batch(reference, omegas, re_r, im_r);
  const Eigen::Index k = omegas.rows();

  if (metric == MainMetric::mse) {
    const double dre = re_r.mean() - re_c.mean();
    const double dim = im_r.mean() - im_c.mean();
    return dre * dre + dim * dim;
  }

  double acc = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    if (metric == MainMetric::pdcfd) {
      acc += pd_loss_from_cf(re_c(j), im_c(j), re_r(j), im_r(j), omegas.row(j).squaredNorm(),
                             penalty);
    } else {
      const double dre = re_r(j) - re_c(j);
      const double dim = im_r(j) - im_c(j);
      acc += dre * dre + dim * dim;
    }
  }
  return acc / static_cast<double>(k);
}

Eigen::MatrixXd metric_loss_grad(const Eigen::MatrixXd& coreset, const Eigen::MatrixXd& reference,
                                 const Eigen::MatrixXd& omegas, const PhasePenaltyParams& penalty,
                                 MainMetric metric) {
  if (coreset.rows() < 1) throw InvalidParameterError("ecf: empty point set");
  if (omegas.rows() < 1) throw InvalidParameterError("ecf: empty frequency set");

  const Eigen::Index m = coreset.rows();
  const Eigen::Index k = omegas.rows();
  const Eigen::MatrixXd phases = coreset * omegas.transpose();  // M x K
  const Eigen::MatrixXd cosp = phases.array().cos();
  const Eigen::MatrixXd sinp = phases.array().sin();
  // Both ECFs go through ecf_batch so that identical point sets yield
  // bit-identical values (and hence an exactly zero gradient).
  Eigen::VectorXd re_c, im_c, re_r, im_r;
  ecf_batch(coreset, omegas, re_c, im_c);
  ecf_batch(reference, omegas, re_r, im_r);

  // Per-frequency coefficients of dL/d(re_c) and dL/d(im_c); the chain
  // through d(re_c)/dy_j = -sin(<w,y_j>) w / M (and cos for im) is applied
  // as one matrix product at the end.
  Eigen::VectorXd coef_re(k), coef_im(k);
  if (metric == MainMetric::mse) {
    const double dre = re_r.mean() - re_c.mean();
    const double dim = im_r.mean() - im_c.mean();
    coef_re.setConstant(-2.0 * dre / static_cast<double>(k));
    coef_im.setConstant(-2.0 * dim / static_cast<double>(k));
  } else {
    const double inv_k = 1.0 / static_cast<double>(k);
    for (Eigen::Index j = 0; j < k; ++j) {
      const double dre = re_r(j) - re_c(j);
      const double dim = im_r(j) - im_c(j);
      double cr = -2.0 * dre;
      double ci = -2.0 * dim;
      if (metric == MainMetric::pdcfd) {
        const double a_c_sq = re_c(j) * re_c(j) + im_c(j) * im_c(j);
        const double a_c = std::sqrt(a_c_sq);
        const double a_r = std::hypot(re_r(j), im_r(j));
        if (a_c >= penalty.amp_floor && a_r >= penalty.amp_floor) {
          const double dtheta =
              wrap_angle(std::atan2(im_r(j), re_r(j)) - std::atan2(im_c(j), re_c(j)));
          const double lam = penalty.lambda_phi(omegas.row(j).squaredNorm());
          // dL/dtheta_c = -2 lam dtheta; dtheta_c/dre = -im/A^2, /dim = re/A^2
          cr += 2.0 * lam * dtheta * im_c(j) / a_c_sq;
          ci += -2.0 * lam * dtheta * re_c(j) / a_c_sq;
        }
      }
      coef_re(j) = cr * inv_k;
      coef_im(j) = ci * inv_k;
    }
  }

  const double inv_m = 1.0 / static_cast<double>(m);
  Eigen::MatrixXd weighted =
      (-sinp * coef_re.asDiagonal() + cosp * coef_im.asDiagonal()) * inv_m;  // M x K
  return weighted * omegas;  // M x d
}

double moment_from_ecf(const Eigen::MatrixXd& points, const std::vector<int>& order, double h) {
  const Eigen::Index d = points.cols();
  if (static_cast<Eigen::Index>(order.size()) != d)
    throw InvalidParameterError("moment_from_ecf: order length must equal dimension");
  if (h <= 0.0) throw InvalidParameterError("moment_from_ecf: h must be positive");
  int total = 0;
  for (int a : order) {
    if (a < 0) throw InvalidParameterError("moment_from_ecf: negative order");
    total += a;
  }
  if (total > 4) throw InvalidParameterError("moment_from_ecf: |order| must be <= 4");

  // Tensor product of per-dimension central-difference stencils.
  double acc_re = 0.0, acc_im = 0.0;
  std::vector<std::size_t> pick(order.size(), 0);
  Eigen::VectorXd t(d);
  while (true) {
    double weight = 1.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const Tap& tap = stencil(order[i])[pick[i]];
      weight *= tap.weight;
      t(i) = tap.offset * h;
    }
    const ComplexCf value = ecf(points, t);
    acc_re += weight * value.re;
    acc_im += weight * value.im;

    Eigen::Index carry = 0;
    while (carry < d) {
      if (++pick[carry] < stencil(order[carry]).size()) break;
      pick[carry] = 0;
      ++carry;
    }
    if (carry == d) break;
  }
  const double scale = std::pow(h, -total);
  acc_re *= scale;
  acc_im *= scale;
  switch (total % 4) {  // divide by i^{|alpha|}
    case 0: return acc_re;
    case 1: return acc_im;
    case 2: return -acc_re;
    default: return -acc_im;
  }
}

}  // namespace fast
