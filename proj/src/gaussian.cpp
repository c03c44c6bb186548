#include "gmf/gaussian.hpp"

#include <Eigen/Cholesky>
#include <sstream>

namespace gmf {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2*pi)

void validate(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols() || cov.rows() != mean.size()) {
    std::ostringstream os;
    os << "covariance is " << cov.rows() << "x" << cov.cols() << " but mean has size "
       << mean.size();
    throw DimensionError(os.str());
  }
  const double scale = std::max(cov.cwiseAbs().maxCoeff(), 1e-300);
  const double asym = (cov - cov.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * scale) {
    std::ostringstream os;
    os << "covariance is not symmetric (max asymmetry " << asym << ", scale " << scale << ")";
    throw SingularCovarianceError(os.str());
  }
}

}  // namespace

Gaussian::Gaussian(Eigen::VectorXd mean, Eigen::MatrixXd cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  validate(mean_, cov_);
  Eigen::LLT<Eigen::MatrixXd> llt(cov_);
  if (llt.info() != Eigen::Success) {
    throw SingularCovarianceError("covariance is not positive definite");
  }
  chol_ = llt.matrixL();
  double log_det_l = 0.0;
  for (int i = 0; i < chol_.rows(); ++i) {
    const double d = chol_(i, i);
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw SingularCovarianceError("covariance is not positive definite");
    }
    log_det_l += std::log(d);
  }
  log_norm_ = -log_det_l - 0.5 * dim() * kLog2Pi;
}

Gaussian gaussian1(double mean, double var) {
  if (!(var > 0.0) || !std::isfinite(var))
    throw SingularCovarianceError("covariance is not positive definite");
  Gaussian g;
  g.mean_ = Eigen::VectorXd::Constant(1, mean);
  g.cov_ = Eigen::MatrixXd::Constant(1, 1, var);
  g.chol_ = Eigen::MatrixXd::Constant(1, 1, std::sqrt(var));
  g.log_norm_ = -0.5 * std::log(var) - 0.5 * kLog2Pi;
  return g;
}

double gaussian_logpdf(const Gaussian& g, const Eigen::VectorXd& x) {
  if (x.size() != g.dim()) {
    std::ostringstream os;
    os << "point has size " << x.size() << " but density has dimension " << g.dim();
    throw DimensionError(os.str());
  }
  if (g.dim() == 1) {
    return normal_logpdf1(x(0), g.mean()(0), g.cov()(0, 0));
  }
  const Eigen::VectorXd y =
      g.chol().triangularView<Eigen::Lower>().solve(x - g.mean());
  return -0.5 * y.squaredNorm() + g.log_norm();
}

double gaussian_pdf(const Gaussian& g, const Eigen::VectorXd& x) {
  return std::exp(gaussian_logpdf(g, x));
}

double product_norm(const Gaussian& a, const Gaussian& b) {
  if (a.dim() != b.dim()) {
    throw DimensionError("inner product of densities with different dimensions");
  }
  if (a.dim() == 1) {
    return normal_pdf1(a.mean()(0), b.mean()(0), a.cov()(0, 0) + b.cov()(0, 0));
  }
  const Gaussian sum(b.mean(), a.cov() + b.cov());
  return gaussian_pdf(sum, a.mean());
}

}  // namespace gmf
