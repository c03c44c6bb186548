#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "gmf/errors.hpp"

namespace gmf {

/// Multivariate Gaussian with a validated covariance.
///
/// The lower-triangular Cholesky factor is computed once at construction and
/// reused by every density evaluation, so evaluation never re-factorizes.
/// Construction rejects covariances that are not symmetric (to 1e-12
/// relative) or not positive definite; nothing is repaired silently.
class Gaussian {
 public:
  Gaussian(Eigen::VectorXd mean, Eigen::MatrixXd cov);

  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  const Eigen::MatrixXd& cov() const noexcept { return cov_; }

  /// Lower-triangular L with L L^T = cov.
  const Eigen::MatrixXd& chol() const noexcept { return chol_; }

  int dim() const noexcept { return static_cast<int>(mean_.size()); }

  /// log of the normalisation constant: -(sum log L_ii + dim/2 * log 2*pi).
  double log_norm() const noexcept { return log_norm_; }

 private:
  Gaussian() = default;
  friend Gaussian gaussian1(double mean, double var);

  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd chol_;
  double log_norm_;
};

/// Convenience constructor for the ubiquitous one-dimensional case. Same
/// validation outcome as the general constructor, but skips the matrix
/// machinery — mixtures build thousands of these per step.
Gaussian gaussian1(double mean, double var);

/// Log density of `g` at `x`.  Never underflows to -inf for finite inputs.
double gaussian_logpdf(const Gaussian& g, const Eigen::VectorXd& x);

/// Density of `g` at `x` (exp of the log density; may underflow to 0 in the
/// extreme tail, which is why downstream code works with logs).
double gaussian_pdf(const Gaussian& g, const Eigen::VectorXd& x);

/// Gaussian inner product: the integral of the pointwise product of two
/// densities, which collapses to one density evaluation,
///   int N(x; ma, A) N(x; mb, B) dx = N(ma; mb, A + B).
/// This closed form is what makes mixture prediction exact later on.
double product_norm(const Gaussian& a, const Gaussian& b);

/// Scalar fast paths used in hot loops; identical to the general versions
/// restricted to one dimension.
inline double normal_logpdf1(double x, double mean, double var) noexcept {
  const double d = x - mean;
  return -0.5 * d * d / var - 0.5 * std::log(2.0 * M_PI * var);
}

inline double normal_pdf1(double x, double mean, double var) noexcept {
  return std::exp(normal_logpdf1(x, mean, var));
}

}  // namespace gmf
