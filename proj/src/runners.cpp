#include "gmf/runners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "gmf/cubature.hpp"
#include "gmf/errors.hpp"

namespace gmf {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_scalar(const StateSpaceModel& model, const char* what) {
  if (model.state_dim() != 1)
    throw UnsupportedModelError(std::string(what) + " handles scalar states only, got dimension " +
                                std::to_string(model.state_dim()));
}

GaussianMixture prior_mixture(const StateSpaceModel& model) {
  GaussianMixture gm;
  gm.weights = {1.0};
  gm.components = {model.prior()};
  return gm;
}

void audit_weights(const std::vector<double>& w, StepDiagnostics& diag) {
  double sum = 0.0, lo = kInf;
  for (double x : w) {
    sum += x;
    lo = std::min(lo, x);
  }
  diag.weight_sum = sum;
  diag.min_weight = w.empty() ? 0.0 : lo;
}

void audit_weights(const Eigen::VectorXd& w, StepDiagnostics& diag) {
  diag.weight_sum = w.sum();
  diag.min_weight = w.size() > 0 ? w.minCoeff() : 0.0;
}

/// Remove components whose weight underflowed to exactly zero. The density
/// is unchanged; the point is to stop dead components from padding later
/// selection windows and evaluation loops.
void drop_zero_weights(GaussianMixture& gm) {
  const bool any = std::find(gm.weights.begin(), gm.weights.end(), 0.0) != gm.weights.end();
  if (!any) return;
  GaussianMixture kept;
  kept.weights.reserve(gm.weights.size());
  kept.components.reserve(gm.components.size());
  for (size_t i = 0; i < gm.weights.size(); ++i) {
    if (gm.weights[i] == 0.0) continue;
    kept.weights.push_back(gm.weights[i]);
    kept.components.push_back(gm.components[i]);
  }
  if (!kept.weights.empty()) gm = std::move(kept);
}

}  // namespace

double FilterRunner::log_density(const Eigen::VectorXd&) const { return kNan; }
double FilterRunner::predictive_log_density(const Eigen::VectorXd&) const { return kNan; }

// ---------------------------------------------------------------------------
// FsgdRunner

FsgdRunner::FsgdRunner(FsgDecomposition table, double window_sigmas, EvidenceRule rule,
                       std::string name)
    : FilterRunner(std::move(name)),
      base_(std::move(table)),
      window_sigmas_(window_sigmas),
      rule_(rule) {
  if (!base_.scaled)
    throw ConfigError("the grid table must carry optimized scales before it can filter");
}

void FsgdRunner::reset(const StateSpaceModel& model, std::uint64_t) {
  if (model_ != &model) {
    require_scalar(model, "the grid-decomposition filter");
    aligned_.clear();
    model_ = &model;
    try {
      model.transition_shift(base_.k + 1, base_.k);
      uses_shift_ = true;
    } catch (const UnsupportedModelError&) {
      uses_shift_ = false;
    }
  }
  posterior_ = prior_mixture(model);
  predictive_ = posterior_;
  post_eval_.reset();
  pred_eval_.reset();
  diag_ = StepDiagnostics{};
  audit_weights(posterior_.weights, diag_);
}

const FsgDecomposition& FsgdRunner::table_for(int k) {
  const auto it = aligned_.find(k);
  if (it != aligned_.end()) return it->second;
  FsgDecomposition t = uses_shift_
                           ? fsg_shift(*model_, base_, k)
                           : apply_fsg_scales(
                                 build_fsg(*model_, k, base_.region_lo, base_.region_hi,
                                           base_.spacing),
                                 {base_.sigma_bar, base_.omega_bar});
  return aligned_.emplace(k, std::move(t)).first->second;
}

void FsgdRunner::step(const Eigen::VectorXd& z, int k) {
  const FsgSelection sel = select_active_fsg(table_for(k - 1), posterior_, window_sigmas_);
  predictive_ = fsgd_predict(posterior_, sel.decomp);
  posterior_ = gmf_update(predictive_, z, *model_, rule_);
  diag_.active_terms = static_cast<int>(sel.decomp.terms.size());
  diag_.fallback_nearest = sel.fallback_nearest;
  diag_.clipped_mass = 0.0;
  audit_weights(posterior_.weights, diag_);
  drop_zero_weights(posterior_);
  post_eval_.reset();
  pred_eval_.reset();
}

Eigen::VectorXd FsgdRunner::estimate() const { return mixture_moments(posterior_).mean; }

double FsgdRunner::log_density(const Eigen::VectorXd& x) const {
  if (!post_eval_) post_eval_.emplace(posterior_);
  return (*post_eval_)(x(0));
}

double FsgdRunner::predictive_log_density(const Eigen::VectorXd& x) const {
  if (!pred_eval_) pred_eval_.emplace(predictive_);
  return (*pred_eval_)(x(0));
}

// ---------------------------------------------------------------------------
// PsgdRunner

PsgdRunner::PsgdRunner(PsgDecomposition base, double window_sigmas, EvidenceRule rule,
                       std::string name, int pad_sites)
    : FilterRunner(std::move(name)),
      base_(std::move(base)),
      window_sigmas_(window_sigmas),
      rule_(rule),
      pad_sites_(pad_sites) {
  if (base_.rank() < 5)
    throw ConfigError("the low-rank filter needs a base table with at least 5 sites, got " +
                      std::to_string(base_.rank()));
}

void PsgdRunner::reset(const StateSpaceModel& model, std::uint64_t) {
  require_scalar(model, "the low-rank filter");
  model_ = &model;
  posterior_ = prior_mixture(model);
  predictive_ = posterior_;
  post_eval_.reset();
  pred_eval_.reset();
  diag_ = StepDiagnostics{};
  audit_weights(posterior_.weights, diag_);
}

void PsgdRunner::step(const Eigen::VectorXd& z, int k) {
  const double q = model_->process_noise_cov()(0, 0);
  const double bump_var = (q / base_.base_q) * base_.shared_var;

  // Window the table around the posterior's image under the transition.
  const auto f = [&](const Eigen::VectorXd& x) { return model_->transition(x, k - 1); };
  double lo = kInf, hi = -kInf;
  for (const Gaussian& comp : posterior_.components) {
    const CubatureTransform t = cubature_transform(comp, f, 1);
    const double sd = std::sqrt(std::max(t.cov(0, 0), 0.0) + bump_var);
    lo = std::min(lo, t.mean(0) - window_sigmas_ * sd);
    hi = std::max(hi, t.mean(0) + window_sigmas_ * sd);
  }
  const PsgDecomposition window = psg_window(base_, q, lo, hi, pad_sites_);

  PsgdPrediction pred = psgd_predict(posterior_, window, *model_, k - 1);
  predictive_ = std::move(pred.predictive);
  posterior_ = gmf_update(predictive_, z, *model_, rule_);
  diag_.active_terms = window.rank();
  diag_.clipped_mass = pred.clipped_mass;
  diag_.fallback_nearest = false;
  audit_weights(posterior_.weights, diag_);
  drop_zero_weights(posterior_);
  post_eval_.reset();
  pred_eval_.reset();
}

Eigen::VectorXd PsgdRunner::estimate() const { return mixture_moments(posterior_).mean; }

double PsgdRunner::log_density(const Eigen::VectorXd& x) const {
  if (!post_eval_) post_eval_.emplace(posterior_);
  return (*post_eval_)(x(0));
}

double PsgdRunner::predictive_log_density(const Eigen::VectorXd& x) const {
  if (!pred_eval_) pred_eval_.emplace(predictive_);
  return (*pred_eval_)(x(0));
}

// ---------------------------------------------------------------------------
// PfRunner

PfRunner::PfRunner(int particles, std::string name)
    : FilterRunner(std::move(name)), count_(particles) {
  if (particles < 2) throw ConfigError("a particle filter needs at least 2 particles");
}

void PfRunner::reset(const StateSpaceModel& model, std::uint64_t rng_seed) {
  model_ = &model;
  rng_.seed(rng_seed);
  particles_ = make_particle_set(model.prior(), count_, rng_);
  diag_ = StepDiagnostics{};
  diag_.active_terms = count_;
  audit_weights(particles_.weights, diag_);
}

void PfRunner::step(const Eigen::VectorXd& z, int k) {
  particles_ = pf_step(particles_, z, *model_, k - 1, rng_);
  diag_.active_terms = count_;
  audit_weights(particles_.weights, diag_);
}

Eigen::VectorXd PfRunner::estimate() const { return point_estimate(particles_); }

// ---------------------------------------------------------------------------
// PmfRunner

namespace {

double grid_logpdf(const PointMassGrid& grid, double x) {
  const long idx = std::lround((x - grid.nodes(0)) / grid.step);
  if (idx < 0 || idx >= grid.count()) return -kInf;
  const double mass = grid.masses(idx);
  return mass > 0.0 ? std::log(mass / grid.step) : -kInf;
}

}  // namespace

PmfRunner::PmfRunner(int nodes, bool recentre, double span_sigmas, std::string name)
    : FilterRunner(std::move(name)), nodes_(nodes), recentre_(recentre),
      span_sigmas_(span_sigmas) {
  if (nodes < 2) throw ConfigError("a point-mass grid needs at least 2 nodes");
}

PmfRunner::PmfRunner(int nodes, double region_lo, double region_hi, std::string name)
    : FilterRunner(std::move(name)), nodes_(nodes), recentre_(false), span_sigmas_(0.0),
      static_region_(true), region_lo_(region_lo), region_hi_(region_hi) {
  if (nodes < 2) throw ConfigError("a point-mass grid needs at least 2 nodes");
  if (!(region_hi > region_lo)) throw ConfigError("the fixed grid region must have positive width");
}

void PmfRunner::reset(const StateSpaceModel& model, std::uint64_t) {
  require_scalar(model, "the point-mass filter");
  model_ = &model;
  if (static_region_) {
    grid_.nodes = Eigen::VectorXd::LinSpaced(nodes_, region_lo_, region_hi_);
    grid_.step = grid_.nodes(1) - grid_.nodes(0);
    const double m = model.prior().mean()(0);
    const double v = model.prior().cov()(0, 0);
    grid_.masses.resize(nodes_);
    for (int i = 0; i < nodes_; ++i) {
      const double d = grid_.nodes(i) - m;
      grid_.masses(i) = std::exp(-0.5 * d * d / v);
    }
    const double total = grid_.masses.sum();
    if (!(total > 0.0))
      throw DegenerateGridError("the prior carries no mass over the fixed grid region");
    grid_.masses /= total;
  } else {
    grid_ = make_point_mass_grid(model.prior(), nodes_, span_sigmas_);
  }
  predictive_ = grid_;
  diag_ = StepDiagnostics{};
  diag_.active_terms = nodes_;
  audit_weights(grid_.masses, diag_);
}

void PmfRunner::step(const Eigen::VectorXd& z, int k) {
  predictive_ = pmf_predict(grid_, *model_, k - 1, recentre_);
  grid_ = predictive_;
  pmf_update(grid_, z, *model_);
  diag_.active_terms = nodes_;
  audit_weights(grid_.masses, diag_);
}

Eigen::VectorXd PmfRunner::estimate() const { return point_estimate(grid_); }

double PmfRunner::log_density(const Eigen::VectorXd& x) const { return grid_logpdf(grid_, x(0)); }

double PmfRunner::predictive_log_density(const Eigen::VectorXd& x) const {
  return grid_logpdf(predictive_, x(0));
}

}  // namespace gmf
