#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "gmf/fsg.hpp"
#include "gmf/mixture.hpp"
#include "gmf/psg.hpp"
#include "gmf/state_space.hpp"

namespace gmf {

/// How component evidence is computed in the measurement update.
/// kNoiseDensity weighs by the measurement-noise density at the innovation,
/// p_v(z - zhat_i); kInnovationDensity uses the full innovation density
/// N(z; zhat_i, S_i), inflating by each component's predicted spread.
enum class EvidenceRule { kNoiseDensity, kInnovationDensity };

/// Per-step bookkeeping surfaced by the filter adapters.
struct StepDiagnostics {
  int active_terms = 0;        // decomposition terms used this step
  double clipped_mass = 0.0;   // negative predictive weight clamped away
  bool fallback_nearest = false;  // term selection found nothing in-window
  double step_duration = 0.0;  // seconds, filled by the benchmark loop
  double weight_sum = 1.0;     // total posterior weight/mass after the step
  double min_weight = 0.0;     // smallest posterior weight/mass after the step
};

/// Posterior plus the time index it refers to.
struct FilterState {
  GaussianMixture posterior;
  int k = 0;
  StepDiagnostics diagnostics;
};

/// Measurement update applied component-wise with the cubature moment
/// approximation: exact for affine observation functions. Weights are
/// multiplied by the chosen evidence and renormalized; the component count
/// never changes. Throws DegenerateUpdateError when every component's
/// evidence underflows to zero (a divergence signal, left to the caller).
GaussianMixture gmf_update(const GaussianMixture& prior, const Eigen::VectorXd& z,
                           const StateSpaceModel& model,
                           EvidenceRule rule = EvidenceRule::kNoiseDensity);

/// Moment-matched prediction: each component is pushed through the transition
/// with the cubature rule and widened by the process noise. Exact for affine
/// transitions; weights are unchanged.
GaussianMixture moment_predict(const GaussianMixture& posterior, const StateSpaceModel& model,
                               int k);

/// Unnormalized predictive weights of the grid-decomposition prediction:
/// beta_j = omega_j * sum_i alpha_i N(m_gamma_j; m_i, var_gamma_j + var_i),
/// evaluated in closed form. Weights are used as given (no internal
/// normalization), which makes the map linear in the posterior.
std::vector<double> fsgd_beta(const GaussianMixture& posterior, const FsgDecomposition& decomp);

/// Predictive mixture of the grid-decomposition filter: components
/// N(x'; m_g_j, var_g_j) weighted by normalized fsgd_beta. Requires a scaled
/// decomposition. Throws SupportMismatchError when every beta vanishes
/// (posterior escaped the decomposition region).
GaussianMixture fsgd_predict(const GaussianMixture& posterior, const FsgDecomposition& decomp);

/// Unnormalized signed predictive weights of the low-rank prediction:
/// beta_j = w_j * sum_i alpha_i E[N(f_k(x); m_j, v)] with the expectation
/// over each posterior component taken by the cubature rule.
std::vector<double> psgd_beta(const GaussianMixture& posterior, const PsgDecomposition& decomp,
                              const StateSpaceModel& model, int k);

struct PsgdPrediction {
  GaussianMixture predictive;
  double clipped_mass = 0.0;  // |negative beta| as a fraction of total |beta|
};

/// Predictive mixture of the low-rank filter: components N(x'; m_j, v) with
/// weights from psgd_beta, negative values clamped to zero and recorded.
/// Throws SupportMismatchError when nothing positive remains.
PsgdPrediction psgd_predict(const GaussianMixture& posterior, const PsgDecomposition& decomp,
                            const StateSpaceModel& model, int k);

struct FsgSelection {
  FsgDecomposition decomp;
  bool fallback_nearest = false;
};

/// Subset of the grid decomposition relevant to the posterior: a term is kept
/// when its anchor falls inside the interval spanned by the posterior
/// component means, each widened by window_sigmas combined standard
/// deviations. An empty selection degrades to the single nearest term with
/// the fallback flag set.
FsgSelection select_active_fsg(const FsgDecomposition& decomp, const GaussianMixture& posterior,
                               double window_sigmas = 6.0);

struct PsgSelection {
  PsgDecomposition decomp;
  bool fallback_nearest = false;
};

/// Same windowing rule applied in the image of the transition: posterior
/// components are pushed through f_k with the cubature rule and sites inside
/// the widened span of the images are kept.
PsgSelection select_active_psg(const PsgDecomposition& decomp, const GaussianMixture& posterior,
                               const StateSpaceModel& model, int k, double window_sigmas = 6.0);

/// Equally weighted random samples representing a posterior.
struct ParticleSet {
  Eigen::MatrixXd samples;  // state_dim x count, one particle per column
  Eigen::VectorXd weights;  // nonnegative, sums to one

  int count() const { return static_cast<int>(weights.size()); }
};

/// Draw `count` particles from the prior, equally weighted.
ParticleSet make_particle_set(const Gaussian& prior, int count, std::mt19937_64& rng);

/// Number of copies of each index under multinomial resampling with the
/// given weights, drawn with the sorted-uniform-spacings method in O(n).
std::vector<int> multinomial_counts(const Eigen::VectorXd& weights, int draws,
                                    std::mt19937_64& rng);

/// One bootstrap cycle: propagate through the transition with a fresh noise
/// draw, weight by the measurement likelihood, and multinomially resample
/// back to equal weights. Throws DegenerateParticleSetError when every
/// likelihood is zero.
ParticleSet pf_step(const ParticleSet& particles, const Eigen::VectorXd& z,
                    const StateSpaceModel& model, int k, std::mt19937_64& rng);

/// Probability masses on an equidistant scalar lattice.
struct PointMassGrid {
  Eigen::VectorXd nodes;
  Eigen::VectorXd masses;  // nonnegative, sums to one
  double step = 0.0;

  int count() const { return static_cast<int>(masses.size()); }
};

/// Lattice of node_count points covering prior mean +- span_sigmas standard
/// deviations, loaded with the discretized prior.
PointMassGrid make_point_mass_grid(const Gaussian& prior, int node_count,
                                   double span_sigmas = 6.0);

/// Prediction by discrete Chapman-Kolmogorov: new mass at a node sums
/// transition-density contributions from every old node. With recentre the
/// lattice is rebuilt over predicted mean +- 6 predicted standard deviations
/// (node count preserved); otherwise the nodes stay put. Scalar models only.
PointMassGrid pmf_predict(const PointMassGrid& grid, const StateSpaceModel& model, int k,
                          bool recentre = true);

/// Multiply masses by the measurement likelihood and renormalize in place.
/// Throws DegenerateGridError when all likelihoods are zero.
void pmf_update(PointMassGrid& grid, const Eigen::VectorXd& z, const StateSpaceModel& model);

/// pmf_predict followed by pmf_update.
PointMassGrid pmf_step(const PointMassGrid& grid, const Eigen::VectorXd& z,
                       const StateSpaceModel& model, int k, bool recentre = true);

/// Posterior mean of each representation.
Eigen::VectorXd point_estimate(const GaussianMixture& gm);
Eigen::VectorXd point_estimate(const ParticleSet& particles);
Eigen::VectorXd point_estimate(const PointMassGrid& grid);

}  // namespace gmf
