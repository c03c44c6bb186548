#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "gmf/gaussian.hpp"

namespace gmf {

/// Discrete-time state-space model with additive Gaussian noise:
///   x[k+1] = transition(x[k], k) + w,   w ~ N(0, Q)
///   z[k]   = observation(x[k]) + v,     v ~ N(0, R)
/// and a Gaussian prior on x[0].
class StateSpaceModel {
 public:
  virtual ~StateSpaceModel() = default;

  virtual int state_dim() const = 0;
  virtual int obs_dim() const = 0;
  virtual Eigen::VectorXd transition(const Eigen::VectorXd& x, int k) const = 0;
  virtual Eigen::VectorXd observation(const Eigen::VectorXd& x) const = 0;
  virtual const Eigen::MatrixXd& process_noise_cov() const = 0;
  virtual const Eigen::MatrixXd& observation_noise_cov() const = 0;
  virtual const Gaussian& prior() const = 0;

  /// Jacobian of the transition at x. The default is a scaled central
  /// difference; models with a known derivative should override it.
  virtual Eigen::MatrixXd transition_jacobian(const Eigen::VectorXd& x, int k) const;

  /// Additive offset d such that transition(x, k) = transition(x, ref) + d
  /// for every x, for models whose time dependence is a pure state-independent
  /// shift. Lets precomputed transition approximations be reused at other
  /// steps. The default throws UnsupportedModelError.
  virtual Eigen::VectorXd transition_shift(int k, int ref) const;
};

/// log N(to; transition(from, k), Q)
double transition_logpdf(const StateSpaceModel& m, const Eigen::VectorXd& from, int k,
                         const Eigen::VectorXd& to);

/// log N(z; observation(x), R)
double observation_logpdf(const StateSpaceModel& m, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& z);

/// A simulated run: states has horizon+1 columns (x[0]..x[horizon]);
/// observations has horizon columns, column k-1 holding the measurement of
/// state column k.
struct Trajectory {
  Eigen::MatrixXd states;
  Eigen::MatrixXd observations;
};

/// Sample a trajectory of the given length. The same seed always yields the
/// same trajectory. Draw order: prior, then per step process noise followed
/// by observation noise.
Trajectory simulate(const StateSpaceModel& m, int horizon, std::uint64_t seed);

/// Write/read a trajectory as CSV with full double precision. Loading a
/// malformed file throws ParseError naming the offending line.
void save_trajectory(const Trajectory& t, const std::string& path);
Trajectory load_trajectory(const std::string& path);

}  // namespace gmf
