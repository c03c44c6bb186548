#include "gmf/ungm.hpp"

#include <cmath>

namespace gmf {

Ungm::Ungm(double process_var, double obs_var, double prior_var)
    : q_(Eigen::MatrixXd::Constant(1, 1, process_var)),
      r_(Eigen::MatrixXd::Constant(1, 1, obs_var)),
      prior_(gaussian1(0.0, prior_var)) {}

Eigen::VectorXd Ungm::transition(const Eigen::VectorXd& x, int k) const {
  const double v = x(0);
  Eigen::VectorXd out(1);
  out(0) = 0.5 * v + 25.0 * v / (1.0 + v * v) + 8.0 * std::cos(1.2 * k);
  return out;
}

Eigen::VectorXd Ungm::observation(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(1);
  out(0) = x(0) * x(0) / 20.0;
  return out;
}

Eigen::MatrixXd Ungm::transition_jacobian(const Eigen::VectorXd& x, int) const {
  const double v = x(0);
  const double d = 1.0 + v * v;
  Eigen::MatrixXd jac(1, 1);
  jac(0, 0) = 0.5 + 25.0 * (1.0 - v * v) / (d * d);
  return jac;
}

Eigen::VectorXd Ungm::transition_shift(int k, int ref) const {
  Eigen::VectorXd d(1);
  d(0) = 8.0 * (std::cos(1.2 * k) - std::cos(1.2 * ref));
  return d;
}

}  // namespace gmf
