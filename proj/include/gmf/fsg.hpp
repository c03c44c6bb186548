#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "gmf/state_space.hpp"

namespace gmf {

/// How the shared weight factor is spread across terms when scales are
/// applied. kPerTermNormalization divides each weight by its own conditioning
/// bump's normalizer (weights then scale with the local slope magnitude);
/// kConstant gives every term the same weight, which keeps the integrated
/// mass of the approximation uniform across the region and is the default.
enum class FsgWeightRule { kConstant, kPerTermNormalization };

/// One product term omega * N(x_next; g_mean, g_var) * N(x; gamma_mean, gamma_var).
struct FsgTerm {
  double omega;
  double g_mean;
  double g_var;
  double gamma_mean;
  double gamma_var;
};

/// Transition-density approximation anchored on a grid over the conditioning
/// variable. Fresh builds are "unscaled": omega = 1 and gamma_var holds the
/// slope-derived base variance, awaiting apply_fsg_scales.
struct FsgDecomposition {
  std::vector<FsgTerm> terms;
  int k = 0;
  double region_lo = 0.0;
  double region_hi = 0.0;
  double spacing = 0.0;
  double sigma_bar = 1.0;
  double omega_bar = 1.0;
  FsgWeightRule rule = FsgWeightRule::kConstant;
  bool scaled = false;
};

/// The two shared scalars tuned by the offline optimization.
struct FsgScales {
  double sigma_bar = 1.0;
  double omega_bar = 1.0;
};

struct FsgOptimizeResult {
  FsgScales scales;
  double criterion = 0.0;    // objective value at the returned scales
  bool hit_boundary = false; // optimum pinned at the search-range edge
};

/// Tensor quadrature grid for the decomposition objective: x spans the build
/// region, x_next spans the transition image padded by pad_sigmas * sqrt(Q),
/// both at step min(spacing, sqrt(Q)) / 4.
struct CriterionLattice {
  Eigen::VectorXd x;
  Eigen::VectorXd x_next;
  double step_x = 0.0;
  double step_x_next = 0.0;
};

/// Lay an equidistant term grid over [region_lo, region_hi] and attach to
/// each site the local transition image and slope-scaled base variance.
/// Scalar-state models only. A slope magnitude below 1e-12 at any site
/// throws NearSingularJacobianError naming that site.
FsgDecomposition build_fsg(const StateSpaceModel& model, int k, double region_lo,
                           double region_hi, double spacing);

CriterionLattice make_criterion_lattice(const StateSpaceModel& model, int k, double region_lo,
                                        double region_hi, double spacing,
                                        double pad_sigmas = 6.0);

/// Discretized squared error sum_cells (p - phat)^2 * cellArea between two
/// bivariate functions of (x_next, x). Generic but O(cells * cost(f)).
double lattice_l2(const std::function<double(double, double)>& p,
                  const std::function<double(double, double)>& phat,
                  const CriterionLattice& lattice);

/// The same discretized objective, specialized to an unscaled decomposition
/// under candidate scales. Exploits the bandedness of every factor; matches
/// lattice_l2 of the applied decomposition to ~1e-9 relative.
double fsg_criterion(const StateSpaceModel& model, int k, const FsgDecomposition& decomp,
                     const FsgScales& scales, const CriterionLattice& lattice);

/// Tune the two shared scalars: the weight factor has a closed-form optimum
/// for every candidate variance factor (the objective is quadratic in it),
/// and the variance factor is found by golden-section search on a log scale
/// over [1e-3, 1e3] to 1e-4 relative tolerance. Gaussian cross terms are
/// evaluated in closed form, so each candidate costs O(M * lattice_x + M^2).
FsgOptimizeResult optimize_fsg_scales(const StateSpaceModel& model, int k,
                                      const FsgDecomposition& decomp,
                                      const CriterionLattice& lattice);

/// Bake scales into a copy: gamma variances multiply by sigma_bar and
/// weights follow the decomposition's weight rule. Refuses already-scaled
/// input.
[[nodiscard]] FsgDecomposition apply_fsg_scales(const FsgDecomposition& decomp,
                                                const FsgScales& scales);

/// sum_j omega_j N(x_next; g_mean_j, g_var_j) N(x; gamma_mean_j, gamma_var_j)
double fsg_evaluate(const FsgDecomposition& decomp, double x_next, double x);

/// Reuse a decomposition at another time step for models whose transition's
/// time dependence is a pure additive shift: transition-image centers move
/// by the shift, everything else is untouched.
FsgDecomposition fsg_shift(const StateSpaceModel& model, const FsgDecomposition& decomp,
                           int k_new);

}  // namespace gmf
