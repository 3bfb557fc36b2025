#pragma once

#include <Eigen/Core>
#include <vector>

namespace fast {

/// One evaluation of an empirical characteristic function.
struct ComplexCf {
  double re = 0.0;
  double im = 0.0;
  double amplitude() const;
  double phase() const;  // atan2(im, re), meaningful only above the amp floor
};

/// Frequency-attenuated phase penalty lambda_p / (1 + alpha * |omega|^2).
/// Below amp_floor the phase of an ECF is numerically meaningless, so the
/// phase term (and its gradient) is forced to zero there.
struct PhasePenaltyParams {
  double lambda_p = 0.3;
  double alpha = 1.2;
  double amp_floor = 1e-6;
  double lambda_phi(double omega_sq_norm) const { return lambda_p / (1.0 + alpha * omega_sq_norm); }
};

/// Which main loss drives the coreset (pdcfd is the default; cfd and mse
/// exist for the metric-swap evaluation mode).
enum class MainMetric { pdcfd, cfd, mse };

struct LossBreakdown {
  double main = 0.0;
  double div = 0.0;
  double match = 0.0;
  double graph = 0.0;
  double total = 0.0;
};

/// Maps an angle into (-pi, pi].
double wrap_angle(double theta);

/// ECF of a point set at one frequency: mean of e^{i<omega, y>} over rows.
ComplexCf ecf(const Eigen::MatrixXd& points, const Eigen::VectorXd& omega);

/// Batched ECF: freq j is row j of `omegas`; fills re/im per frequency.
/// Uses pairwise (blocked) summation above 4096 points.
void ecf_batch(const Eigen::MatrixXd& points, const Eigen::MatrixXd& omegas, Eigen::VectorXd& re,
               Eigen::VectorXd& im);

/// Naive empirical CF distance: mean over frequencies of the squared modulus
/// of the ECF gap.
double cfd_naive(const Eigen::MatrixXd& coreset, const Eigen::MatrixXd& reference,
                 const Eigen::MatrixXd& omegas);

/// Phase-decoupled per-frequency loss: squared ECF gap plus an attenuated
/// penalty on the wrapped phase difference.
double pd_cf_loss(const Eigen::MatrixXd& coreset, const Eigen::MatrixXd& reference,
                  const Eigen::VectorXd& omega, const PhasePenaltyParams& penalty);

/// Same loss from precomputed ECF values (used where the reference ECF is
/// cached per frequency).
double pd_loss_from_cf(double re_c, double im_c, double re_r, double im_r, double omega_sq_norm,
                       const PhasePenaltyParams& penalty);

/// Mean of pd_cf_loss over a frequency batch.
double main_loss(const Eigen::MatrixXd& coreset, const Eigen::MatrixXd& reference,
                 const Eigen::MatrixXd& omegas, const PhasePenaltyParams& penalty);

/// Exact gradient of main_loss with respect to every coreset entry. The
/// wrapped phase gap is treated as a locally constant shift, and guarded
/// phase terms contribute exactly zero.
Eigen::MatrixXd grad_main_loss(const Eigen::MatrixXd& coreset, const Eigen::MatrixXd& reference,
                               const Eigen::MatrixXd& omegas, const PhasePenaltyParams& penalty);

/// Metric-selectable variants used by the optimizer and the metric-swap
/// evaluation mode. pdcfd == main_loss; cfd drops the phase term; mse is the
/// squared error of batch-averaged ECF components (aggregate alignment).
double metric_loss(const Eigen::MatrixXd& coreset, const Eigen::MatrixXd& reference,
                   const Eigen::MatrixXd& omegas, const PhasePenaltyParams& penalty,
                   MainMetric metric);
Eigen::MatrixXd metric_loss_grad(const Eigen::MatrixXd& coreset, const Eigen::MatrixXd& reference,
                                 const Eigen::MatrixXd& omegas, const PhasePenaltyParams& penalty,
                                 MainMetric metric);

/// Raw moment E[X^alpha] estimated from central finite differences of the
/// ECF at the origin, divided by i^{|alpha|}. |alpha| <= 4.
double moment_from_ecf(const Eigen::MatrixXd& points, const std::vector<int>& order,
                       double h = 1e-3);

}  // namespace fast
