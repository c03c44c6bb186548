#include "gmf/cubature.hpp"

#include <cmath>
#include <sstream>

#include "gmf/errors.hpp"

namespace gmf {

CubaturePointSet cubature_points(const Gaussian& g) {
  const int n = g.dim();
  const double scale = std::sqrt(static_cast<double>(n));
  CubaturePointSet ps;
  ps.points.resize(n, 2 * n);
  ps.weights = Eigen::VectorXd::Constant(2 * n, 1.0 / (2.0 * n));
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd offset = scale * g.chol().col(i);
    ps.points.col(2 * i) = g.mean() + offset;
    ps.points.col(2 * i + 1) = g.mean() - offset;
  }
  return ps;
}

CubatureTransform cubature_transform(
    const Gaussian& g, const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
    int out_dim) {
  if (out_dim <= 0) throw DimensionError("output dimension must be positive");
  const CubaturePointSet ps = cubature_points(g);
  const int n = g.dim();
  const int np = static_cast<int>(ps.points.cols());
  Eigen::MatrixXd images(out_dim, np);
  for (int i = 0; i < np; ++i) {
    const Eigen::VectorXd y = f(ps.points.col(i));
    if (y.size() != out_dim)
      throw DimensionError("map returned a vector of size " + std::to_string(y.size()) +
                           ", expected " + std::to_string(out_dim));
    if (!y.allFinite()) {
      std::ostringstream msg;
      msg << "map produced a non-finite value at point (";
      for (int j = 0; j < n; ++j) msg << (j ? ", " : "") << ps.points(j, i);
      msg << ")";
      throw PropagationError(msg.str());
    }
    images.col(i) = y;
  }
  CubatureTransform tr;
  tr.mean = images * ps.weights;
  tr.cov = Eigen::MatrixXd::Zero(out_dim, out_dim);
  tr.cross = Eigen::MatrixXd::Zero(n, out_dim);
  for (int i = 0; i < np; ++i) {
    const Eigen::VectorXd dy = images.col(i) - tr.mean;
    const Eigen::VectorXd dx = ps.points.col(i) - g.mean();
    tr.cov += ps.weights(i) * dy * dy.transpose();
    tr.cross += ps.weights(i) * dx * dy.transpose();
  }
  return tr;
}

}  // namespace gmf
