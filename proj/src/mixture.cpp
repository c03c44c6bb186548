#include "gmf/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gmf/errors.hpp"

namespace gmf {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

void check_consistent(const GaussianMixture& gm) {
  if (gm.components.empty()) throw DegenerateMixtureError("mixture has no components");
  if (gm.weights.size() != gm.components.size())
    throw DimensionError("mixture has " + std::to_string(gm.weights.size()) + " weights but " +
                         std::to_string(gm.components.size()) + " components");
  const int n = gm.components.front().dim();
  for (const Gaussian& g : gm.components)
    if (g.dim() != n) throw DimensionError("mixture components have differing dimensions");
}

}  // namespace

void normalize_weights(std::vector<double>& weights) {
  if (weights.empty()) throw DegenerateMixtureError("cannot normalize an empty weight vector");
  double max_w = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w) || w < 0.0)
      throw DegenerateMixtureError("weights must be finite and non-negative");
    max_w = std::max(max_w, w);
  }
  if (max_w == 0.0) throw DegenerateMixtureError("all weights are zero");
  // Divide by the maximum first so subnormal inputs renormalise exactly.
  double sum = 0.0;
  for (double& w : weights) {
    w /= max_w;
    sum += w;
  }
  for (double& w : weights) w /= sum;
}

MixtureMoments mixture_moments(const GaussianMixture& gm) {
  check_consistent(gm);
  std::vector<double> w = gm.weights;
  normalize_weights(w);
  const int n = gm.dim();
  MixtureMoments mm;
  mm.mean = Eigen::VectorXd::Zero(n);
  for (std::size_t i = 0; i < gm.size(); ++i) mm.mean += w[i] * gm.components[i].mean();
  mm.cov = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < gm.size(); ++i) {
    const Eigen::VectorXd d = gm.components[i].mean() - mm.mean;
    mm.cov += w[i] * (gm.components[i].cov() + d * d.transpose());
  }
  return mm;
}

double mixture_logpdf(const GaussianMixture& gm, const Eigen::VectorXd& x) {
  check_consistent(gm);
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> lp(gm.size());
  for (std::size_t i = 0; i < gm.size(); ++i) {
    lp[i] = gm.weights[i] > 0.0
                ? std::log(gm.weights[i]) + gaussian_logpdf(gm.components[i], x)
                : -std::numeric_limits<double>::infinity();
    best = std::max(best, lp[i]);
  }
  if (!std::isfinite(best)) return best;
  double acc = 0.0;
  for (double v : lp) acc += std::exp(v - best);
  return best + std::log(acc);
}

MixtureLogPdf1::MixtureLogPdf1(const GaussianMixture& gm) {
  if (gm.components.empty()) throw DegenerateMixtureError("mixture has no components");
  if (gm.weights.size() != gm.components.size())
    throw DimensionError("mixture weight/component count mismatch");
  if (gm.dim() != 1)
    throw DimensionError("compiled evaluator only supports one-dimensional mixtures");
  terms_.reserve(gm.size());
  for (std::size_t i = 0; i < gm.size(); ++i) {
    const double w = gm.weights[i];
    if (!std::isfinite(w) || w < 0.0)
      throw DegenerateMixtureError("weights must be finite and non-negative");
    if (w == 0.0) continue;
    const double var = gm.components[i].cov()(0, 0);
    Term t;
    t.mean = gm.components[i].mean()(0);
    t.neg_half_inv_var = -0.5 / var;
    t.log_scale = std::log(w) - 0.5 * (kLog2Pi + std::log(var));
    terms_.push_back(t);
    sigma_max_ = std::max(sigma_max_, std::sqrt(var));
  }
  if (terms_.empty()) throw DegenerateMixtureError("all mixture weights are zero");
  std::sort(terms_.begin(), terms_.end(),
            [](const Term& a, const Term& b) { return a.mean < b.mean; });
  log_scale_max_ = -std::numeric_limits<double>::infinity();
  for (const Term& t : terms_) log_scale_max_ = std::max(log_scale_max_, t.log_scale);
}

double MixtureLogPdf1::operator()(double x) const {
  // Anchor score: the term whose mean is nearest to x gives a lower bound on
  // the maximum term score, from which a search radius follows. Any term
  // farther than the radius is below the anchor by more than the cutoff and
  // cannot move the log-sum at double precision.
  constexpr double kCutoff = 45.0;  // exp(-45) ~ 2.9e-20
  const auto cmp = [](const Term& t, double v) { return t.mean < v; };
  auto it = std::lower_bound(terms_.begin(), terms_.end(), x, cmp);
  std::size_t anchor;
  if (it == terms_.begin())
    anchor = 0;
  else if (it == terms_.end())
    anchor = terms_.size() - 1;
  else {
    const std::size_t hi = static_cast<std::size_t>(it - terms_.begin());
    anchor = (x - terms_[hi - 1].mean <= terms_[hi].mean - x) ? hi - 1 : hi;
  }
  const Term& a = terms_[anchor];
  const double da = x - a.mean;
  const double s0 = a.log_scale + a.neg_half_inv_var * da * da;
  // Terms with |x - mean| > r satisfy score < log_scale_max - d^2/(2 sigma_max^2)
  // <= s0 - kCutoff, so they are negligible.
  const double gap = log_scale_max_ - s0 + kCutoff;
  const double r = sigma_max_ * std::sqrt(2.0 * std::max(gap, 0.0));

  const auto lo = std::lower_bound(terms_.begin(), terms_.end(), x - r, cmp);
  const auto hi = std::upper_bound(lo, terms_.end(), x + r,
                                   [](double v, const Term& t) { return v < t.mean; });
  if (lo == hi) return s0;  // rounding collapsed the window to nothing
  double best = s0;
  for (auto p = lo; p != hi; ++p) {
    const double d = x - p->mean;
    best = std::max(best, p->log_scale + p->neg_half_inv_var * d * d);
  }
  double acc = 0.0;
  for (auto p = lo; p != hi; ++p) {
    const double d = x - p->mean;
    acc += std::exp(p->log_scale + p->neg_half_inv_var * d * d - best);
  }
  return best + std::log(acc);
}

}  // namespace gmf
