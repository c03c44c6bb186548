#pragma once

#include "gmf/state_space.hpp"

namespace gmf {

/// Univariate nonstationary growth model, the standard strongly nonlinear
/// scalar benchmark:
///   x[k+1] = 0.5 x + 25 x / (1 + x^2) + 8 cos(1.2 k) + w
///   z[k]   = x^2 / 20 + v
/// with w ~ N(0, process_var), v ~ N(0, obs_var), x[0] ~ N(0, prior_var).
class Ungm : public StateSpaceModel {
 public:
  explicit Ungm(double process_var = 0.1, double obs_var = 0.1, double prior_var = 0.01);

  int state_dim() const override { return 1; }
  int obs_dim() const override { return 1; }
  Eigen::VectorXd transition(const Eigen::VectorXd& x, int k) const override;
  Eigen::VectorXd observation(const Eigen::VectorXd& x) const override;
  Eigen::MatrixXd transition_jacobian(const Eigen::VectorXd& x, int k) const override;
  Eigen::VectorXd transition_shift(int k, int ref) const override;
  const Eigen::MatrixXd& process_noise_cov() const override { return q_; }
  const Eigen::MatrixXd& observation_noise_cov() const override { return r_; }
  const Gaussian& prior() const override { return prior_; }

 private:
  Eigen::MatrixXd q_, r_;
  Gaussian prior_;
};

}  // namespace gmf
