#include "gmf/fsg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "gmf/errors.hpp"
#include "gmf/gaussian.hpp"

namespace gmf {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
// exp(-50) ~ 2e-22: beyond this many standard deviations a factor is treated
// as zero inside the banded objective evaluation.
constexpr double kBandSigmas = 10.0;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

void check_region(double lo, double hi, double spacing) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
    throw ConfigError("decomposition region [" + format_double(lo) + ", " + format_double(hi) +
                      "] is not a finite non-empty interval");
  if (!std::isfinite(spacing) || !(spacing > 0.0))
    throw ConfigError("grid spacing must be positive, got " + format_double(spacing));
}

int grid_count(double lo, double hi, double spacing) {
  return static_cast<int>(std::floor((hi - lo) / spacing + 1e-9)) + 1;
}

double scalar_transition(const StateSpaceModel& model, double x, int k) {
  Eigen::VectorXd v(1);
  v << x;
  return model.transition(v, k)(0);
}

/// Per-term weight multiplier for the given shared scales, before the shared
/// omega_bar factor: constant rule spreads omega_bar evenly, the
/// normalization rule divides by each conditioning bump's own normalizer.
double rule_factor(FsgWeightRule rule, double sigma_bar, double base_gamma_var) {
  switch (rule) {
    case FsgWeightRule::kConstant:
      return 1.0 / std::sqrt(kTwoPi * sigma_bar);
    case FsgWeightRule::kPerTermNormalization:
      return 1.0 / std::sqrt(kTwoPi * sigma_bar * base_gamma_var);
  }
  throw Error("unknown weight rule");
}

void check_scales(const FsgScales& s) {
  if (!std::isfinite(s.sigma_bar) || !(s.sigma_bar > 0.0) || !std::isfinite(s.omega_bar) ||
      !(s.omega_bar > 0.0))
    throw ConfigError("scale factors must be positive and finite");
}

Eigen::VectorXd linspace_covering(double lo, double hi, double target_step) {
  const int n = std::max(2, static_cast<int>(std::lround((hi - lo) / target_step)) + 1);
  Eigen::VectorXd v(n);
  const double step = (hi - lo) / (n - 1);
  for (int i = 0; i < n; ++i) v(i) = lo + i * step;
  v(n - 1) = hi;
  return v;
}

}  // namespace

FsgDecomposition build_fsg(const StateSpaceModel& model, int k, double region_lo,
                           double region_hi, double spacing) {
  if (model.state_dim() != 1)
    throw UnsupportedModelError("grid decomposition only supports scalar state models, got dim " +
                                std::to_string(model.state_dim()));
  check_region(region_lo, region_hi, spacing);

  const double q = model.process_noise_cov()(0, 0);
  const int n = grid_count(region_lo, region_hi, spacing);

  FsgDecomposition d;
  d.terms.reserve(n);
  d.k = k;
  d.region_lo = region_lo;
  d.region_hi = region_hi;
  d.spacing = spacing;

  Eigen::VectorXd point(1);
  for (int j = 0; j < n; ++j) {
    const double m = region_lo + j * spacing;
    point(0) = m;
    const double slope = model.transition_jacobian(point, k)(0, 0);
    if (!std::isfinite(slope) || std::abs(slope) < 1e-12)
      throw NearSingularJacobianError("transition slope is numerically zero at grid point " +
                                      format_double(m));
    d.terms.push_back({1.0, model.transition(point, k)(0), q, m, q / (slope * slope)});
  }
  return d;
}

CriterionLattice make_criterion_lattice(const StateSpaceModel& model, int k, double region_lo,
                                        double region_hi, double spacing, double pad_sigmas) {
  if (model.state_dim() != 1)
    throw UnsupportedModelError("objective lattice only supports scalar state models");
  check_region(region_lo, region_hi, spacing);

  const double q = model.process_noise_cov()(0, 0);
  const double sq = std::sqrt(q);
  const double step = std::min(spacing, sq) / 4.0;

  CriterionLattice lat;
  lat.x = linspace_covering(region_lo, region_hi, step);
  lat.step_x = lat.x(1) - lat.x(0);

  double f_lo = std::numeric_limits<double>::infinity();
  double f_hi = -f_lo;
  for (int i = 0; i < lat.x.size(); ++i) {
    const double f = scalar_transition(model, lat.x(i), k);
    f_lo = std::min(f_lo, f);
    f_hi = std::max(f_hi, f);
  }
  lat.x_next = linspace_covering(f_lo - pad_sigmas * sq, f_hi + pad_sigmas * sq, step);
  lat.step_x_next = lat.x_next(1) - lat.x_next(0);
  return lat;
}

double lattice_l2(const std::function<double(double, double)>& p,
                  const std::function<double(double, double)>& phat,
                  const CriterionLattice& lattice) {
  double total = 0.0;
  for (int i = 0; i < lattice.x.size(); ++i) {
    const double x = lattice.x(i);
    double col = 0.0;
    for (int j = 0; j < lattice.x_next.size(); ++j) {
      const double d = p(lattice.x_next(j), x) - phat(lattice.x_next(j), x);
      col += d * d;
    }
    total += col;
  }
  return total * lattice.step_x * lattice.step_x_next;
}

double fsg_criterion(const StateSpaceModel& model, int k, const FsgDecomposition& decomp,
                     const FsgScales& scales, const CriterionLattice& lattice) {
  if (decomp.scaled)
    throw Error("objective evaluation expects an unscaled decomposition; scales are supplied "
                "separately");
  check_scales(scales);

  const int m = static_cast<int>(decomp.terms.size());
  const int nx = static_cast<int>(lattice.x.size());
  const int nz = static_cast<int>(lattice.x_next.size());
  const double hz = lattice.step_x_next;
  const double z0 = lattice.x_next(0);
  const double q = decomp.terms.empty() ? model.process_noise_cov()(0, 0)
                                        : decomp.terms.front().g_var;
  const double g_norm = 1.0 / std::sqrt(kTwoPi * q);
  const double g_radius = kBandSigmas * std::sqrt(q);
  // Shared ratio-of-ratios factor of the transition-axis recurrence: the grid
  // is equidistant, so exp(-(d + i h)^2 / (2q)) advances by two multiplies.
  const double ratio_step = std::exp(-hz * hz / q);

  // Fold candidate scales into per-term weights and conditioning variances.
  std::vector<double> weight(m), var(m), inv2v(m), norm(m);
  for (int j = 0; j < m; ++j) {
    const FsgTerm& t = decomp.terms[j];
    weight[j] = scales.omega_bar * rule_factor(decomp.rule, scales.sigma_bar, t.gamma_var) *
                t.omega;
    var[j] = scales.sigma_bar * t.gamma_var;
    inv2v[j] = 0.5 / var[j];
    norm[j] = 1.0 / std::sqrt(kTwoPi * var[j]);
  }

  Eigen::VectorXd col = Eigen::VectorXd::Zero(nz);
  const auto clamp_index = [&](double z) {
    return std::clamp(static_cast<int>(std::floor((z - z0) / hz)), 0, nz - 1);
  };

  double total = 0.0;
  for (int ix = 0; ix < nx; ++ix) {
    const double xa = lattice.x(ix);
    int touched_lo = nz, touched_hi = -1;

    for (int j = 0; j < m; ++j) {
      const double dx = xa - decomp.terms[j].gamma_mean;
      const double arg = dx * dx * inv2v[j];
      if (arg > 0.5 * kBandSigmas * kBandSigmas) continue;
      const double coeff = weight[j] * norm[j] * std::exp(-arg) * g_norm;

      const double mg = decomp.terms[j].g_mean;
      const int i0 = clamp_index(mg - g_radius);
      const int i1 = clamp_index(mg + g_radius);
      const double d0 = z0 + i0 * hz - mg;
      double value = std::exp(-d0 * d0 / (2.0 * q));
      double ratio = std::exp(-(2.0 * d0 * hz + hz * hz) / (2.0 * q));
      for (int i = i0; i <= i1; ++i) {
        col(i) += coeff * value;
        value *= ratio;
        ratio *= ratio_step;
      }
      touched_lo = std::min(touched_lo, i0);
      touched_hi = std::max(touched_hi, i1);
    }

    // Reference density occupies its own band around the transition image.
    const double mp = scalar_transition(model, xa, k);
    const int p0 = clamp_index(mp - g_radius);
    const int p1 = clamp_index(mp + g_radius);
    const double d0 = z0 + p0 * hz - mp;
    double p_value = g_norm * std::exp(-d0 * d0 / (2.0 * q));
    double p_ratio = std::exp(-(2.0 * d0 * hz + hz * hz) / (2.0 * q));

    const int u0 = std::min(p0, touched_lo);
    const int u1 = std::max(p1, touched_hi);
    for (int i = u0; i <= u1; ++i) {
      double p = 0.0;
      if (i >= p0 && i <= p1) {
        p = p_value;
        p_value *= p_ratio;
        p_ratio *= ratio_step;
      }
      const double diff = p - col(i);
      total += diff * diff;
    }
    if (touched_hi >= touched_lo)
      col.segment(touched_lo, touched_hi - touched_lo + 1).setZero();
  }
  return total * lattice.step_x * hz;
}

namespace {

/// Cross moments of the objective under unit shared weight: linear term
/// t2 = <p, b> and quadratic term t3 = <b, b> where b is the decomposition
/// with omega_bar = 1 at the candidate variance factor. The optimal shared
/// weight is then t2 / t3 and the objective value t1 - t2^2 / t3.
struct CrossMoments {
  double t2 = 0.0;
  double t3 = 0.0;
};

CrossMoments cross_moments(const FsgDecomposition& decomp, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& fx, double hx, double sigma_bar) {
  const int m = static_cast<int>(decomp.terms.size());
  const int nx = static_cast<int>(x.size());
  const double q = decomp.terms.front().g_var;
  const double lo = decomp.region_lo, hi = decomp.region_hi;

  std::vector<double> rho(m), var(m);
  for (int j = 0; j < m; ++j) {
    rho[j] = rule_factor(decomp.rule, sigma_bar, decomp.terms[j].gamma_var) *
             decomp.terms[j].omega;
    var[j] = sigma_bar * decomp.terms[j].gamma_var;
  }

  CrossMoments out;
  // <p, b>: the transition axis marginalizes in closed form, the conditioning
  // axis is summed on the same nodes the discrete objective uses.
  const double t2_norm = 1.0 / std::sqrt(2.0 * kTwoPi * q);  // N(.; ., 2q) normalizer
  for (int j = 0; j < m; ++j) {
    const FsgTerm& t = decomp.terms[j];
    const double inv4q = 1.0 / (4.0 * q);
    const double inv2v = 0.5 / var[j];
    const double gamma_norm = 1.0 / std::sqrt(kTwoPi * var[j]);
    double acc = 0.0;
    for (int i = 0; i < nx; ++i) {
      const double dg = fx(i) - t.g_mean;
      const double dgam = x(i) - t.gamma_mean;
      const double arg = dg * dg * inv4q + dgam * dgam * inv2v;
      if (arg > 60.0) continue;
      acc += std::exp(-arg);
    }
    out.t2 += rho[j] * acc * hx * t2_norm * gamma_norm;
  }

  // <b, b>: both axes in closed form; the conditioning-axis integral is
  // restricted to the build region to match the discrete objective's domain.
  for (int j = 0; j < m; ++j) {
    const FsgTerm& tj = decomp.terms[j];
    for (int l = j; l < m; ++l) {
      const FsgTerm& tl = decomp.terms[l];
      const double dg = tj.g_mean - tl.g_mean;
      const double vsum = var[j] + var[l];
      const double dgam = tj.gamma_mean - tl.gamma_mean;
      const double arg = dg * dg / (4.0 * q) + dgam * dgam / (2.0 * vsum);
      if (arg > 60.0) continue;
      const double mu_p = (tj.gamma_mean * var[l] + tl.gamma_mean * var[j]) / vsum;
      const double sd_p = std::sqrt(2.0 * var[j] * var[l] / vsum);
      const double inside = 0.5 * (std::erf((hi - mu_p) / sd_p) - std::erf((lo - mu_p) / sd_p));
      const double value = rho[j] * rho[l] * std::exp(-arg) * inside /
                           (std::sqrt(2.0 * kTwoPi * q) * std::sqrt(kTwoPi * vsum));
      out.t3 += (j == l) ? value : 2.0 * value;
    }
  }
  return out;
}

}  // namespace

FsgOptimizeResult optimize_fsg_scales(const StateSpaceModel& model, int k,
                                      const FsgDecomposition& decomp,
                                      const CriterionLattice& lattice) {
  if (decomp.scaled) throw Error("scale optimization expects an unscaled decomposition");
  if (decomp.terms.empty()) throw ConfigError("cannot optimize an empty decomposition");

  const int nx = static_cast<int>(lattice.x.size());
  Eigen::VectorXd fx(nx);
  for (int i = 0; i < nx; ++i) fx(i) = scalar_transition(model, lattice.x(i), k);

  const double q = decomp.terms.front().g_var;
  const double hx = lattice.step_x;
  // Node sum of the squared reference density: the transition axis
  // contributes 1 / (2 sqrt(pi q)) per column to spectral accuracy.
  const double t1 = nx * hx / (2.0 * std::sqrt(M_PI * q));

  const double t_lo = std::log(1e-3), t_hi = std::log(1e3);
  const double tol = 1e-4;
  const auto objective = [&](double t) {
    const CrossMoments cm = cross_moments(decomp, lattice.x, fx, hx, std::exp(t));
    return t1 - cm.t2 * cm.t2 / cm.t3;
  };

  const double inv_phi = 0.6180339887498949;
  double a = t_lo, b = t_hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double jc = objective(c), jd = objective(d);
  while (b - a > tol) {
    if (jc < jd) {
      b = d;
      d = c;
      jd = jc;
      c = b - inv_phi * (b - a);
      jc = objective(c);
    } else {
      a = c;
      c = d;
      jc = jd;
      d = a + inv_phi * (b - a);
      jd = objective(d);
    }
  }
  const double t_star = 0.5 * (a + b);
  const CrossMoments cm = cross_moments(decomp, lattice.x, fx, hx, std::exp(t_star));

  FsgOptimizeResult out;
  out.scales.sigma_bar = std::exp(t_star);
  out.scales.omega_bar = cm.t2 / cm.t3;
  // The closed-form surrogate treats the conditioning axis as a continuous
  // integral, which differs from the node sum near the region edges; report
  // the exact discrete objective at the chosen scales instead.
  out.criterion = fsg_criterion(model, k, decomp, out.scales, lattice);
  out.hit_boundary = (t_star - t_lo <= 10.0 * tol) || (t_hi - t_star <= 10.0 * tol);
  return out;
}

FsgDecomposition apply_fsg_scales(const FsgDecomposition& decomp, const FsgScales& scales) {
  if (decomp.scaled) throw Error("decomposition already carries applied scales");
  check_scales(scales);

  FsgDecomposition out = decomp;
  for (FsgTerm& t : out.terms) {
    t.omega = scales.omega_bar * rule_factor(decomp.rule, scales.sigma_bar, t.gamma_var) *
              t.omega;
    t.gamma_var = scales.sigma_bar * t.gamma_var;
  }
  out.sigma_bar = scales.sigma_bar;
  out.omega_bar = scales.omega_bar;
  out.scaled = true;
  return out;
}

double fsg_evaluate(const FsgDecomposition& decomp, double x_next, double x) {
  double total = 0.0;
  for (const FsgTerm& t : decomp.terms) {
    const double dz = x_next - t.g_mean;
    const double qz = dz * dz / (2.0 * t.g_var);
    if (qz > 80.0) continue;
    const double dx = x - t.gamma_mean;
    const double qx = dx * dx / (2.0 * t.gamma_var);
    if (qz + qx > 80.0) continue;
    total += t.omega * std::exp(-qz - qx) / (kTwoPi * std::sqrt(t.g_var * t.gamma_var));
  }
  return total;
}

FsgDecomposition fsg_shift(const StateSpaceModel& model, const FsgDecomposition& decomp,
                           int k_new) {
  const double move = model.transition_shift(k_new, decomp.k)(0);
  FsgDecomposition out = decomp;
  for (FsgTerm& t : out.terms) t.g_mean += move;
  out.k = k_new;
  return out;
}

}  // namespace gmf
