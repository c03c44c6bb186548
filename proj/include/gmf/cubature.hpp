#pragma once

#include <Eigen/Dense>
#include <functional>

#include "gmf/gaussian.hpp"

namespace gmf {

/// Deterministic sigma-point set: 2n equally weighted points placed at
/// mean +- sqrt(n) * L * e_i, where L is the Cholesky factor of the
/// covariance. The set reproduces the source mean and covariance exactly
/// and integrates polynomials up to third degree exactly.
struct CubaturePointSet {
  Eigen::MatrixXd points;   // n x 2n, one point per column
  Eigen::VectorXd weights;  // 2n, each 1/(2n)
};

CubaturePointSet cubature_points(const Gaussian& g);

/// Result of pushing a Gaussian through a nonlinear map y = f(x):
/// approximate mean and covariance of y and the input-output cross
/// covariance Cov(x, y).
struct CubatureTransform {
  Eigen::VectorXd mean;   // m
  Eigen::MatrixXd cov;    // m x m
  Eigen::MatrixXd cross;  // n x m
};

/// Propagate g through f (mapping R^n -> R^out_dim) using the point set
/// above. Exact for affine f. Throws PropagationError (naming the offending
/// input point) if f produces a non-finite value or a vector of the wrong
/// size.
CubatureTransform cubature_transform(
    const Gaussian& g, const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
    int out_dim);

}  // namespace gmf
