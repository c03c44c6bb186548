#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>

#include "gmf/filters.hpp"
#include "gmf/fsg.hpp"
#include "gmf/mixture.hpp"
#include "gmf/psg.hpp"
#include "gmf/state_space.hpp"

namespace gmf {

/// Uniform driving surface over the filter families so the benchmark loop,
/// the CLI and the tests can treat them interchangeably. A runner owns its
/// whole recursion state: reset() binds it to a model and re-initializes from
/// the prior, step(z, k) advances the posterior from step k-1 to k and
/// absorbs the measurement of step k. Runners that maintain an explicit
/// density expose it through log_density()/predictive_log_density(); the
/// others report NaN and has_density() == false.
class FilterRunner {
 public:
  explicit FilterRunner(std::string name) : name_(std::move(name)) {}
  virtual ~FilterRunner() = default;

  const std::string& name() const { return name_; }
  virtual void reset(const StateSpaceModel& model, std::uint64_t rng_seed) = 0;
  virtual void step(const Eigen::VectorXd& z, int k) = 0;
  virtual Eigen::VectorXd estimate() const = 0;

  virtual bool has_density() const { return false; }
  /// Filtering log-density after the latest step; NaN when has_density() is
  /// false, -inf where the representation carries no mass.
  virtual double log_density(const Eigen::VectorXd& x) const;
  /// Log-density of the latest one-step-ahead prediction (before the update).
  virtual double predictive_log_density(const Eigen::VectorXd& x) const;

  const StepDiagnostics& diagnostics() const { return diag_; }

 protected:
  const StateSpaceModel* model_ = nullptr;
  StepDiagnostics diag_;

 private:
  std::string name_;
};

/// Mixture filter driven by a precomputed axis-aligned grid decomposition of
/// the transition density. Each step the table is aligned to the current time
/// index — through the model's additive shift when it supports one, by
/// rebuilding on the stored region otherwise (uses_shift() reports which) —
/// the active terms are selected around the posterior, and the closed-form
/// prediction is followed by the mixture measurement update; components
/// whose posterior weight underflows to zero are dropped afterwards. Aligned
/// tables are cached per time index and survive reset() under the same
/// model, so repeated Monte-Carlo runs pay the alignment cost once.
class FsgdRunner : public FilterRunner {
 public:
  explicit FsgdRunner(FsgDecomposition table, double window_sigmas = 6.0,
                      EvidenceRule rule = EvidenceRule::kNoiseDensity,
                      std::string name = "gmf-fsgd");

  void reset(const StateSpaceModel& model, std::uint64_t rng_seed) override;
  void step(const Eigen::VectorXd& z, int k) override;
  Eigen::VectorXd estimate() const override;
  bool has_density() const override { return true; }
  double log_density(const Eigen::VectorXd& x) const override;
  double predictive_log_density(const Eigen::VectorXd& x) const override;

  bool uses_shift() const { return uses_shift_; }
  const GaussianMixture& posterior() const { return posterior_; }

 private:
  const FsgDecomposition& table_for(int k);

  FsgDecomposition base_;
  double window_sigmas_;
  EvidenceRule rule_;
  bool uses_shift_ = true;
  std::map<int, FsgDecomposition> aligned_;
  GaussianMixture posterior_, predictive_;
  mutable std::optional<MixtureLogPdf1> post_eval_, pred_eval_;
};

/// Mixture filter driven by a low-rank separable decomposition of the
/// stationary transition kernel. Each step the offline table is retiled into
/// a window covering the posterior's image under the transition (widened by
/// window_sigmas combined standard deviations), so one table follows the
/// state wherever it drifts; prediction then lands on the window's shared
/// bumps and the usual measurement update follows. Components whose
/// predictive weight was clamped to zero are dropped afterwards — they carry
/// no mass, but would otherwise keep inflating the next window.
class PsgdRunner : public FilterRunner {
 public:
  explicit PsgdRunner(PsgDecomposition base, double window_sigmas = 6.0,
                      EvidenceRule rule = EvidenceRule::kNoiseDensity,
                      std::string name = "gmf-psgd", int pad_sites = 4);

  void reset(const StateSpaceModel& model, std::uint64_t rng_seed) override;
  void step(const Eigen::VectorXd& z, int k) override;
  Eigen::VectorXd estimate() const override;
  bool has_density() const override { return true; }
  double log_density(const Eigen::VectorXd& x) const override;
  double predictive_log_density(const Eigen::VectorXd& x) const override;

  const GaussianMixture& posterior() const { return posterior_; }

 private:
  PsgDecomposition base_;
  double window_sigmas_;
  EvidenceRule rule_;
  int pad_sites_;
  GaussianMixture posterior_, predictive_;
  mutable std::optional<MixtureLogPdf1> post_eval_, pred_eval_;
};

/// Bootstrap particle filter baseline. Owns its RNG; reset(model, seed)
/// makes the whole run a deterministic function of the seed.
class PfRunner : public FilterRunner {
 public:
  explicit PfRunner(int particles, std::string name = "pf");

  void reset(const StateSpaceModel& model, std::uint64_t rng_seed) override;
  void step(const Eigen::VectorXd& z, int k) override;
  Eigen::VectorXd estimate() const override;

  const ParticleSet& particles() const { return particles_; }

 private:
  int count_;
  ParticleSet particles_;
  std::mt19937_64 rng_;
};

/// Point-mass (grid) filter baseline on an equidistant scalar lattice,
/// recentring the lattice on the predicted moments each step by default.
/// Its density is piecewise constant: mass/step on the cell around each
/// node, -inf outside the lattice span.
///
/// The static-region constructor pins the lattice to [region_lo, region_hi]
/// for the whole run instead: reset() lays the nodes over that interval and
/// weights them by the prior density, and step() never moves them.
class PmfRunner : public FilterRunner {
 public:
  explicit PmfRunner(int nodes, bool recentre = true, double span_sigmas = 6.0,
                     std::string name = "pmf");

  /// Fixed-lattice variant covering [region_lo, region_hi] with `nodes` nodes.
  PmfRunner(int nodes, double region_lo, double region_hi, std::string name = "pmf");

  void reset(const StateSpaceModel& model, std::uint64_t rng_seed) override;
  void step(const Eigen::VectorXd& z, int k) override;
  Eigen::VectorXd estimate() const override;
  bool has_density() const override { return true; }
  double log_density(const Eigen::VectorXd& x) const override;
  double predictive_log_density(const Eigen::VectorXd& x) const override;

  const PointMassGrid& grid() const { return grid_; }

 private:
  int nodes_;
  bool recentre_;
  double span_sigmas_;
  bool static_region_ = false;
  double region_lo_ = 0.0, region_hi_ = 0.0;
  PointMassGrid grid_, predictive_;
};

}  // namespace gmf
