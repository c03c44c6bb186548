#include "gmf/filters.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gmf/cubature.hpp"
#include "gmf/errors.hpp"
#include "gmf/gaussian.hpp"
#include "gmf/rng.hpp"

namespace gmf {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void check_scalar_state(const StateSpaceModel& model, const char* what) {
  if (model.state_dim() != 1)
    throw UnsupportedModelError(std::string(what) + " supports scalar-state models only (got " +
                                std::to_string(model.state_dim()) + " dimensions)");
}

VectorXd linspace(double lo, double hi, int n) {
  VectorXd v(n);
  const double step = (hi - lo) / (n - 1);
  for (int i = 0; i < n; ++i) v(i) = lo + i * step;
  v(n - 1) = hi;
  return v;
}

}  // namespace

GaussianMixture gmf_update(const GaussianMixture& prior, const Eigen::VectorXd& z,
                           const StateSpaceModel& model, EvidenceRule rule) {
  if (prior.size() == 0) throw DegenerateMixtureError("measurement update on an empty mixture");
  const int zd = model.obs_dim();
  if (z.size() != zd)
    throw DimensionError("measurement has dimension " + std::to_string(z.size()) +
                         ", model observes " + std::to_string(zd));
  const MatrixXd& r = model.observation_noise_cov();
  const Gaussian noise(VectorXd::Zero(zd), r);
  const auto h = [&](const VectorXd& x) { return model.observation(x); };

  GaussianMixture out;
  out.weights.reserve(prior.size());
  out.components.reserve(prior.size());
  double total = 0.0;
  if (model.state_dim() == 1 && zd == 1) {
    // Scalar fast path: the cubature pair is m +- sqrt(var), and every matrix
    // op collapses to arithmetic on doubles. Same math as the general branch.
    const double rv = r(0, 0);
    VectorXd x(1);
    for (std::size_t i = 0; i < prior.size(); ++i) {
      const Gaussian& comp = prior.components[i];
      const double m = comp.mean()(0);
      const double sd = comp.chol()(0, 0);
      x(0) = m - sd;
      const double h_lo = model.observation(x)(0);
      x(0) = m + sd;
      const double h_hi = model.observation(x)(0);
      const double zhat = 0.5 * (h_lo + h_hi);
      const double s = 0.25 * (h_hi - h_lo) * (h_hi - h_lo) + rv;
      const double cross = 0.5 * sd * (h_hi - h_lo);
      const double gain = cross / s;
      const double innovation = z(0) - zhat;
      const double mean = m + gain * innovation;
      const double var = comp.cov()(0, 0) - gain * gain * s;
      const double evidence = rule == EvidenceRule::kNoiseDensity
                                  ? normal_pdf1(innovation, 0.0, rv)
                                  : normal_pdf1(z(0), zhat, s);
      const double w = prior.weights[i] * evidence;
      total += w;
      out.weights.push_back(w);
      out.components.push_back(gaussian1(mean, var));
    }
  } else {
    for (std::size_t i = 0; i < prior.size(); ++i) {
      const Gaussian& comp = prior.components[i];
      const CubatureTransform t = cubature_transform(comp, h, zd);
      const MatrixXd s = t.cov + r;
      const Eigen::LLT<MatrixXd> llt(s);
      const MatrixXd gain = llt.solve(t.cross.transpose()).transpose();
      const VectorXd innovation = z - t.mean;

      VectorXd mean = comp.mean() + gain * innovation;
      MatrixXd cov = comp.cov() - gain * s * gain.transpose();
      cov = 0.5 * (cov + cov.transpose());

      const double evidence = rule == EvidenceRule::kNoiseDensity
                                  ? std::exp(gaussian_logpdf(noise, innovation))
                                  : std::exp(gaussian_logpdf(Gaussian(t.mean, s), z));
      const double w = prior.weights[i] * evidence;
      total += w;
      out.weights.push_back(w);
      out.components.emplace_back(std::move(mean), std::move(cov));
    }
  }
  if (total == 0.0)
    throw DegenerateUpdateError(
        "every component's measurement evidence underflowed; the filter has lost the target");
  normalize_weights(out.weights);
  return out;
}

GaussianMixture moment_predict(const GaussianMixture& posterior, const StateSpaceModel& model,
                               int k) {
  if (posterior.size() == 0) throw DegenerateMixtureError("prediction on an empty mixture");
  const MatrixXd& q = model.process_noise_cov();
  const auto f = [&](const VectorXd& x) { return model.transition(x, k); };
  GaussianMixture out;
  out.weights = posterior.weights;
  out.components.reserve(posterior.size());
  for (const Gaussian& comp : posterior.components) {
    const CubatureTransform t = cubature_transform(comp, f, model.state_dim());
    MatrixXd cov = t.cov + q;
    cov = 0.5 * (cov + cov.transpose());
    out.components.emplace_back(t.mean, std::move(cov));
  }
  return out;
}

std::vector<double> fsgd_beta(const GaussianMixture& posterior, const FsgDecomposition& decomp) {
  if (posterior.dim() != 1)
    throw DimensionError("grid-decomposition prediction expects a scalar posterior");
  std::vector<double> beta(decomp.terms.size(), 0.0);
  for (std::size_t j = 0; j < decomp.terms.size(); ++j) {
    const FsgTerm& t = decomp.terms[j];
    double acc = 0.0;
    for (std::size_t i = 0; i < posterior.size(); ++i)
      acc += posterior.weights[i] *
             normal_pdf1(t.gamma_mean, posterior.components[i].mean()(0),
                         t.gamma_var + posterior.components[i].cov()(0, 0));
    beta[j] = t.omega * acc;
  }
  return beta;
}

GaussianMixture fsgd_predict(const GaussianMixture& posterior, const FsgDecomposition& decomp) {
  if (!decomp.scaled)
    throw Error("grid decomposition must be scaled before prediction (apply_fsg_scales)");
  const std::vector<double> beta = fsgd_beta(posterior, decomp);
  double total = 0.0;
  for (double b : beta) total += b;
  if (!(total > 0.0))
    throw SupportMismatchError(
        "posterior support no longer overlaps the decomposition region; every predictive weight "
        "vanished");
  GaussianMixture out;
  out.weights.reserve(beta.size());
  out.components.reserve(beta.size());
  for (std::size_t j = 0; j < beta.size(); ++j) {
    out.weights.push_back(beta[j] / total);
    out.components.push_back(gaussian1(decomp.terms[j].g_mean, decomp.terms[j].g_var));
  }
  return out;
}

std::vector<double> psgd_beta(const GaussianMixture& posterior, const PsgDecomposition& decomp,
                              const StateSpaceModel& model, int k) {
  check_scalar_state(model, "low-rank prediction");
  if (posterior.dim() != 1)
    throw DimensionError("low-rank prediction expects a scalar posterior");
  const double v = decomp.shared_var;
  std::vector<double> beta(decomp.rank(), 0.0);
  // Sites are an equidistant lattice, so the ones within reach of an
  // evaluation point form a directly computable index range. 12 standard
  // deviations keep every contribution above ~5e-32 of the peak.
  const double band = 12.0 * std::sqrt(v);
  const auto add_point = [&](double p, double scale) {
    int j0 = 0, j1 = decomp.rank() - 1;
    if (decomp.step > 0.0) {
      const double origin = decomp.locations(0);
      j0 = std::max(j0, static_cast<int>(std::ceil((p - band - origin) / decomp.step)));
      j1 = std::min(j1, static_cast<int>(std::floor((p + band - origin) / decomp.step)));
    }
    for (int j = j0; j <= j1; ++j) beta[j] += scale * normal_pdf1(p, decomp.locations(j), v);
  };
  for (std::size_t i = 0; i < posterior.size(); ++i) {
    const CubaturePointSet pts = cubature_points(posterior.components[i]);
    // Scalar state: two equally weighted points.
    const double f0 = model.transition(pts.points.col(0), k)(0);
    const double f1 = model.transition(pts.points.col(1), k)(0);
    add_point(f0, 0.5 * posterior.weights[i]);
    add_point(f1, 0.5 * posterior.weights[i]);
  }
  for (int j = 0; j < decomp.rank(); ++j) beta[j] *= decomp.weights(j);
  return beta;
}

PsgdPrediction psgd_predict(const GaussianMixture& posterior, const PsgDecomposition& decomp,
                            const StateSpaceModel& model, int k) {
  const std::vector<double> beta = psgd_beta(posterior, decomp, model, k);
  double positive = 0.0, negative = 0.0;
  for (double b : beta) (b >= 0.0 ? positive : negative) += std::abs(b);
  if (!(positive > 0.0))
    throw SupportMismatchError(
        "posterior image no longer overlaps the decomposition window; every predictive weight "
        "vanished");
  PsgdPrediction out;
  out.clipped_mass = negative / (positive + negative);
  out.predictive.weights.reserve(beta.size());
  out.predictive.components.reserve(beta.size());
  for (int j = 0; j < decomp.rank(); ++j) {
    out.predictive.weights.push_back(std::max(beta[j], 0.0) / positive);
    out.predictive.components.push_back(gaussian1(decomp.locations(j), decomp.shared_var));
  }
  return out;
}

FsgSelection select_active_fsg(const FsgDecomposition& decomp, const GaussianMixture& posterior,
                               double window_sigmas) {
  if (posterior.dim() != 1) throw DimensionError("term selection expects a scalar posterior");
  FsgSelection out;
  out.decomp = decomp;
  out.decomp.terms.clear();
  for (const FsgTerm& t : decomp.terms) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = 0; i < posterior.size(); ++i) {
      const double reach =
          window_sigmas * std::sqrt(posterior.components[i].cov()(0, 0) + t.gamma_var);
      lo = std::min(lo, posterior.components[i].mean()(0) - reach);
      hi = std::max(hi, posterior.components[i].mean()(0) + reach);
    }
    if (t.gamma_mean >= lo && t.gamma_mean <= hi) out.decomp.terms.push_back(t);
  }
  if (out.decomp.terms.empty()) {
    out.fallback_nearest = true;
    double best = std::numeric_limits<double>::infinity();
    const FsgTerm* pick = &decomp.terms.front();
    for (const FsgTerm& t : decomp.terms)
      for (std::size_t i = 0; i < posterior.size(); ++i) {
        const double d = std::abs(t.gamma_mean - posterior.components[i].mean()(0));
        if (d < best) {
          best = d;
          pick = &t;
        }
      }
    out.decomp.terms.push_back(*pick);
  }
  return out;
}

PsgSelection select_active_psg(const PsgDecomposition& decomp, const GaussianMixture& posterior,
                               const StateSpaceModel& model, int k, double window_sigmas) {
  check_scalar_state(model, "term selection");
  const auto f = [&](const VectorXd& x) { return model.transition(x, k); };
  std::vector<double> image_mean(posterior.size()), image_sd(posterior.size());
  for (std::size_t i = 0; i < posterior.size(); ++i) {
    const CubatureTransform t = cubature_transform(posterior.components[i], f, 1);
    image_mean[i] = t.mean(0);
    image_sd[i] = std::sqrt(std::max(t.cov(0, 0), 0.0) + decomp.shared_var);
  }
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < posterior.size(); ++i) {
    lo = std::min(lo, image_mean[i] - window_sigmas * image_sd[i]);
    hi = std::max(hi, image_mean[i] + window_sigmas * image_sd[i]);
  }
  std::vector<int> kept;
  for (int j = 0; j < decomp.rank(); ++j)
    if (decomp.locations(j) >= lo && decomp.locations(j) <= hi) kept.push_back(j);
  PsgSelection out;
  if (kept.empty()) {
    out.fallback_nearest = true;
    int pick = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < decomp.rank(); ++j)
      for (std::size_t i = 0; i < posterior.size(); ++i) {
        const double d = std::abs(decomp.locations(j) - image_mean[i]);
        if (d < best) {
          best = d;
          pick = j;
        }
      }
    kept.push_back(pick);
  }
  out.decomp = decomp;
  out.decomp.weights.resize(kept.size());
  out.decomp.locations.resize(kept.size());
  for (std::size_t n = 0; n < kept.size(); ++n) {
    out.decomp.weights(n) = decomp.weights(kept[n]);
    out.decomp.locations(n) = decomp.locations(kept[n]);
  }
  out.decomp.region_lo = out.decomp.locations(0);
  out.decomp.region_hi = out.decomp.locations(kept.size() - 1);
  return out;
}

ParticleSet make_particle_set(const Gaussian& prior, int count, std::mt19937_64& rng) {
  if (count < 2) throw ConfigError("a particle set needs at least 2 particles");
  ParticleSet out;
  out.samples.resize(prior.dim(), count);
  for (int i = 0; i < count; ++i) out.samples.col(i) = sample_gaussian(prior, rng);
  out.weights = VectorXd::Constant(count, 1.0 / count);
  return out;
}

std::vector<int> multinomial_counts(const Eigen::VectorXd& weights, int draws,
                                    std::mt19937_64& rng) {
  const int n = static_cast<int>(weights.size());
  if (n == 0) throw DegenerateParticleSetError("resampling an empty weight vector");
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!(weights(i) >= 0.0))
      throw DegenerateParticleSetError("negative or non-finite resampling weight");
    total += weights(i);
  }
  if (!(total > 0.0)) throw DegenerateParticleSetError("resampling weights sum to zero");

  // Sorted uniforms via exponential spacings: one pass over the weights.
  std::exponential_distribution<double> exponential(1.0);
  std::vector<double> arrival(draws);
  double running = 0.0;
  for (int d = 0; d < draws; ++d) {
    running += exponential(rng);
    arrival[d] = running;
  }
  running += exponential(rng);

  std::vector<int> counts(n, 0);
  int idx = 0;
  double cdf = weights(0) / total;
  for (int d = 0; d < draws; ++d) {
    const double u = arrival[d] / running;
    while (u > cdf && idx + 1 < n) {
      ++idx;
      cdf += weights(idx) / total;
    }
    ++counts[idx];
  }
  return counts;
}

ParticleSet pf_step(const ParticleSet& particles, const Eigen::VectorXd& z,
                    const StateSpaceModel& model, int k, std::mt19937_64& rng) {
  const int n = particles.count();
  if (n < 2) throw ConfigError("the bootstrap filter needs at least 2 particles");
  const Gaussian process_noise(VectorXd::Zero(model.state_dim()), model.process_noise_cov());

  Eigen::MatrixXd propagated(model.state_dim(), n);
  Eigen::VectorXd log_like(n);
  double max_ll = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    propagated.col(i) =
        model.transition(particles.samples.col(i), k) + sample_gaussian(process_noise, rng);
    log_like(i) = observation_logpdf(model, propagated.col(i), z);
    max_ll = std::max(max_ll, log_like(i));
  }
  if (!std::isfinite(max_ll))
    throw DegenerateParticleSetError(
        "every particle's measurement likelihood underflowed; the particle set has collapsed");

  Eigen::VectorXd reweighted(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    reweighted(i) = particles.weights(i) * std::exp(log_like(i) - max_ll);
    total += reweighted(i);
  }
  if (!(total > 0.0))
    throw DegenerateParticleSetError("all posterior particle weights vanished");

  const std::vector<int> copies = multinomial_counts(reweighted, n, rng);
  ParticleSet out;
  out.samples.resize(model.state_dim(), n);
  int at = 0;
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < copies[i]; ++c) out.samples.col(at++) = propagated.col(i);
  out.weights = VectorXd::Constant(n, 1.0 / n);
  return out;
}

PointMassGrid make_point_mass_grid(const Gaussian& prior, int node_count, double span_sigmas) {
  if (prior.dim() != 1)
    throw UnsupportedModelError("the point-mass grid supports scalar states only");
  if (node_count < 2) throw ConfigError("a point-mass grid needs at least 2 nodes");
  if (!(span_sigmas > 0.0)) throw ConfigError("grid span must be positive");
  const double mean = prior.mean()(0), sd = std::sqrt(prior.cov()(0, 0));
  PointMassGrid out;
  out.nodes = linspace(mean - span_sigmas * sd, mean + span_sigmas * sd, node_count);
  out.step = out.nodes(1) - out.nodes(0);
  out.masses.resize(node_count);
  for (int i = 0; i < node_count; ++i)
    out.masses(i) = normal_pdf1(out.nodes(i), mean, prior.cov()(0, 0));
  out.masses /= out.masses.sum();
  return out;
}

PointMassGrid pmf_predict(const PointMassGrid& grid, const StateSpaceModel& model, int k,
                          bool recentre) {
  check_scalar_state(model, "the point-mass filter");
  const int n = grid.count();
  const double q = model.process_noise_cov()(0, 0);

  Eigen::VectorXd image(n);
  VectorXd x(1);
  for (int i = 0; i < n; ++i) {
    x(0) = grid.nodes(i);
    image(i) = model.transition(x, k)(0);
  }
  const double pred_mean = grid.masses.dot(image);
  double pred_var = q;
  for (int i = 0; i < n; ++i)
    pred_var += grid.masses(i) * (image(i) - pred_mean) * (image(i) - pred_mean);

  PointMassGrid out;
  if (recentre) {
    const double sd = std::sqrt(pred_var);
    out.nodes = linspace(pred_mean - 6.0 * sd, pred_mean + 6.0 * sd, n);
  } else {
    out.nodes = grid.nodes;
  }
  out.step = out.nodes(1) - out.nodes(0);
  out.masses = VectorXd::Zero(n);

  // Dense discrete Chapman-Kolmogorov sum: every destination node gathers the
  // transition density from every source node. This full pairwise sweep is the
  // point-mass filter's defining cost.
  const double inv2q = 0.5 / q;
  const double norm = 1.0 / std::sqrt(2.0 * M_PI * q);
  for (int j = 0; j < n; ++j) {
    const double node = out.nodes(j);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = node - image(i);
      acc += grid.masses(i) * std::exp(-d * d * inv2q);
    }
    out.masses(j) = acc * norm * grid.step;
  }
  const double total = out.masses.sum();
  if (!(total > 0.0))
    throw DegenerateGridError("predicted point-mass distribution has no mass on the grid");
  out.masses /= total;
  return out;
}

void pmf_update(PointMassGrid& grid, const Eigen::VectorXd& z, const StateSpaceModel& model) {
  VectorXd x(1);
  for (int i = 0; i < grid.count(); ++i) {
    x(0) = grid.nodes(i);
    grid.masses(i) *= std::exp(observation_logpdf(model, x, z));
  }
  const double total = grid.masses.sum();
  if (!(total > 0.0))
    throw DegenerateGridError(
        "every grid node's measurement likelihood underflowed; the filter has lost the target");
  grid.masses /= total;
}

PointMassGrid pmf_step(const PointMassGrid& grid, const Eigen::VectorXd& z,
                       const StateSpaceModel& model, int k, bool recentre) {
  PointMassGrid out = pmf_predict(grid, model, k, recentre);
  pmf_update(out, z, model);
  return out;
}

Eigen::VectorXd point_estimate(const GaussianMixture& gm) { return mixture_moments(gm).mean; }

Eigen::VectorXd point_estimate(const ParticleSet& particles) {
  return particles.samples * particles.weights;
}

Eigen::VectorXd point_estimate(const PointMassGrid& grid) {
  return VectorXd::Constant(1, grid.masses.dot(grid.nodes));
}

}  // namespace gmf
