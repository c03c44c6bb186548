#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gmf/gaussian.hpp"

namespace gmf {

/// Weighted sum of Gaussian components. Weights are kept alongside the
/// components rather than inside them so they can be renormalised cheaply.
struct GaussianMixture {
  std::vector<double> weights;
  std::vector<Gaussian> components;

  std::size_t size() const noexcept { return components.size(); }
  int dim() const noexcept { return components.empty() ? 0 : components.front().dim(); }
};

/// Scale weights in place so they sum to one. Throws DegenerateMixtureError
/// if any weight is negative or non-finite, or if all weights are zero.
/// Subnormal totals are handled by dividing by the running maximum first.
void normalize_weights(std::vector<double>& weights);

struct MixtureMoments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Overall mean and covariance of the mixture (weights need not be
/// pre-normalised; they are normalised internally for the computation).
MixtureMoments mixture_moments(const GaussianMixture& gm);

/// log of the mixture density at x, computed with a log-sum-exp so that
/// points far into the tails stay finite instead of flushing to -inf.
double mixture_logpdf(const GaussianMixture& gm, const Eigen::VectorXd& x);

/// Precompiled evaluator for repeated one-dimensional mixture log-density
/// queries. Terms are sorted by mean once; each query then scans only the
/// neighbourhood that can contribute above a fixed relative floor (~1e-19
/// of the leading term), so large mixtures evaluate in roughly O(window)
/// instead of O(size). Zero-weight terms are dropped up front.
class MixtureLogPdf1 {
 public:
  explicit MixtureLogPdf1(const GaussianMixture& gm);

  double operator()(double x) const;

 private:
  struct Term {
    double mean;
    double neg_half_inv_var;  // -1/(2 var)
    double log_scale;         // log w - 0.5 log(2 pi var)
  };
  std::vector<Term> terms_;  // sorted by mean
  double sigma_max_ = 0.0;   // widest component std dev
  double log_scale_max_ = 0.0;
};

}  // namespace gmf
