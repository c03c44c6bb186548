#pragma once

#include <Eigen/Dense>

namespace gmf {

/// Separable low-rank approximation of a stationary Gaussian kernel
/// N(a; b, q) by sum_j w_j N(a; m_j, v) N(b; m_j, v): equidistant shared
/// locations, one shared bump variance, signed least-squares weights. Being
/// a function of a - b only, the same table serves every time step and can
/// be rescaled to other noise levels (psg_adapt).
struct PsgDecomposition {
  Eigen::VectorXd weights;    // signed least-squares solution
  Eigen::VectorXd locations;  // shared centers on both axes
  double shared_var = 0.0;    // bump variance on both axes
  double step = 0.0;          // location lattice step
  double region_lo = 0.0;
  double region_hi = 0.0;
  double base_q = 0.0;        // kernel variance the weights were fit against
  double bump_coeff = 0.5;    // shared_var = bump_coeff * step^2

  int rank() const { return static_cast<int>(locations.size()); }
};

/// Fit the table: rank equidistant locations over [region_lo, region_hi],
/// shared variance bump_coeff * step^2, weights solving the dense
/// least-squares fit of N(a; b, q) on the region^2 evaluation lattice with
/// step = (location step) / 4. A rank-deficient design (bumps much wider
/// than the region) raises IllConditionedDecompositionError.
PsgDecomposition build_psg(double q, int rank, double region_lo, double region_hi,
                           double bump_coeff = 0.5);

/// Rescale the table to another kernel variance and recenter it: locations
/// map through x -> sqrt(q_new/base_q) * x + shift, variances scale
/// linearly, weights pick up the 1-D change-of-variables factor so the
/// reconstruction keeps approximating a density in a - b.
PsgDecomposition psg_adapt(const PsgDecomposition& base, double q_new, double shift);

/// Uniform-weight window cut from a base decomposition: sites on the base
/// lattice (rescaled to q_new) covering [lo, hi] plus `pad_sites` extra
/// sites on each side, every weight set to the base's mid-lattice value.
/// The interior of a wide equidistant least-squares solution is translation
/// invariant, so a retiled window loses only the edge corrections — which
/// the padding pushes outside the span the caller asked for. Lets one
/// offline table track a support that moves or stretches over time. Throws
/// ConfigError for non-positive q_new, an empty [lo, hi), or a base with
/// fewer than 5 sites (no interior to copy).
PsgDecomposition psg_window(const PsgDecomposition& base, double q_new, double lo, double hi,
                            int pad_sites = 4);

/// sum_j w_j N(x_next; m_j, v) N(fx; m_j, v). Signed weights: slightly
/// negative values off-ridge are expected; clamping is the caller's concern.
double psg_evaluate(const PsgDecomposition& decomp, double x_next, double fx);

/// Relative L2 error of the reconstruction against N(a; b, base_q) over the
/// central `interior` fraction of region^2, sampled at step/4.
double psg_reconstruction_error(const PsgDecomposition& decomp, double interior = 0.8);

}  // namespace gmf
