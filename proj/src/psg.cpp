#include "gmf/psg.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "gmf/errors.hpp"
#include "gmf/gaussian.hpp"

namespace gmf {

namespace {

Eigen::VectorXd lattice(double lo, double hi, double target_step) {
  const int n = std::max(2, static_cast<int>(std::lround((hi - lo) / target_step)) + 1);
  Eigen::VectorXd v(n);
  const double step = (hi - lo) / (n - 1);
  for (int i = 0; i < n; ++i) v(i) = lo + i * step;
  v(n - 1) = hi;
  return v;
}

/// Bump values N(node_i; m_j, v) for every node/location pair.
Eigen::MatrixXd bump_matrix(const Eigen::VectorXd& nodes, const Eigen::VectorXd& locations,
                            double var) {
  Eigen::MatrixXd u(nodes.size(), locations.size());
  for (int j = 0; j < locations.size(); ++j)
    for (int i = 0; i < nodes.size(); ++i) u(i, j) = normal_pdf1(nodes(i), locations(j), var);
  return u;
}

}  // namespace

PsgDecomposition build_psg(double q, int rank, double region_lo, double region_hi,
                           double bump_coeff) {
  if (!std::isfinite(q) || q <= 0.0)
    throw ConfigError("kernel variance must be positive, got " + std::to_string(q));
  if (rank < 1) throw ConfigError("rank must be at least 1, got " + std::to_string(rank));
  if (!std::isfinite(region_lo) || !std::isfinite(region_hi) || !(region_lo < region_hi))
    throw ConfigError("decomposition region is not a finite non-empty interval");
  if (!std::isfinite(bump_coeff) || bump_coeff <= 0.0)
    throw ConfigError("bump variance coefficient must be positive");

  PsgDecomposition d;
  d.region_lo = region_lo;
  d.region_hi = region_hi;
  d.base_q = q;
  d.bump_coeff = bump_coeff;
  if (rank == 1) {
    d.step = region_hi - region_lo;
    d.locations = Eigen::VectorXd::Constant(1, 0.5 * (region_lo + region_hi));
  } else {
    d.step = (region_hi - region_lo) / (rank - 1);
    d.locations.resize(rank);
    for (int j = 0; j < rank; ++j) d.locations(j) = region_lo + j * d.step;
  }
  d.shared_var = bump_coeff * d.step * d.step;

  // Least squares against N(a; b, q) on the region^2 lattice at step/4. The
  // design is separable — column j is u_j(a) u_j(b) — so the normal equations
  // collapse to a Hadamard square of the one-axis Gram matrix.
  const Eigen::VectorXd nodes = lattice(region_lo, region_hi, d.step / 4.0);
  const int n = static_cast<int>(nodes.size());
  const Eigen::MatrixXd u = bump_matrix(nodes, d.locations, d.shared_var);
  const Eigen::MatrixXd h = u.transpose() * u;
  const Eigen::MatrixXd gram = h.cwiseProduct(h);

  Eigen::MatrixXd kernel(n, n);
  for (int b = 0; b < n; ++b)
    for (int a = 0; a < n; ++a) kernel(a, b) = normal_pdf1(nodes(a), nodes(b), q);
  Eigen::VectorXd rhs(rank);
  for (int j = 0; j < rank; ++j) rhs(j) = u.col(j).dot(kernel * u.col(j));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const double max_eig = eig.eigenvalues().maxCoeff();
  const double min_eig = eig.eigenvalues().minCoeff();
  if (!(max_eig > 0.0) || min_eig < 1e-10 * max_eig) {
    char ratio[32];
    std::snprintf(ratio, sizeof(ratio), "%.3e", max_eig > 0.0 ? min_eig / max_eig : 0.0);
    throw IllConditionedDecompositionError(
        std::string("least-squares design is rank deficient (relative smallest eigenvalue ") +
        ratio + "); reduce the rank or narrow the bumps");
  }
  d.weights =
      eig.eigenvectors() *
      (eig.eigenvalues().cwiseInverse().asDiagonal() * (eig.eigenvectors().transpose() * rhs));
  return d;
}

PsgDecomposition psg_adapt(const PsgDecomposition& base, double q_new, double shift) {
  if (!std::isfinite(q_new) || q_new <= 0.0)
    throw ConfigError("adapted kernel variance must be positive, got " + std::to_string(q_new));
  if (!std::isfinite(shift)) throw ConfigError("adaptation shift must be finite");

  const double s = std::sqrt(q_new / base.base_q);
  PsgDecomposition out = base;
  out.locations = (s * base.locations).array() + shift;
  out.weights = s * base.weights;  // keeps the reconstruction a density in a - b
  out.shared_var = s * s * base.shared_var;
  out.step = s * base.step;
  out.region_lo = s * base.region_lo + shift;
  out.region_hi = s * base.region_hi + shift;
  out.base_q = q_new;
  return out;
}

PsgDecomposition psg_window(const PsgDecomposition& base, double q_new, double lo, double hi,
                            int pad_sites) {
  if (!std::isfinite(q_new) || q_new <= 0.0)
    throw ConfigError("windowed kernel variance must be positive, got " + std::to_string(q_new));
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
    throw ConfigError("window span is not a finite non-empty interval");
  if (base.rank() < 5)
    throw ConfigError("windowing needs a base decomposition with at least 5 sites, got " +
                      std::to_string(base.rank()));
  if (pad_sites < 0) throw ConfigError("pad_sites must be non-negative");

  const double s = std::sqrt(q_new / base.base_q);
  const double step = s * base.step;
  const double interior_weight = s * base.weights(base.rank() / 2);
  const long i0 = static_cast<long>(std::floor(lo / step)) - pad_sites;
  const long i1 = static_cast<long>(std::ceil(hi / step)) + pad_sites;
  const int count = static_cast<int>(i1 - i0 + 1);

  PsgDecomposition out;
  out.weights = Eigen::VectorXd::Constant(count, interior_weight);
  out.locations.resize(count);
  for (int j = 0; j < count; ++j) out.locations(j) = (i0 + j) * step;
  out.shared_var = s * s * base.shared_var;
  out.step = step;
  out.region_lo = out.locations(0);
  out.region_hi = out.locations(count - 1);
  out.base_q = q_new;
  out.bump_coeff = base.bump_coeff;
  return out;
}

double psg_evaluate(const PsgDecomposition& decomp, double x_next, double fx) {
  const double inv2v = 0.5 / decomp.shared_var;
  const double norm = 1.0 / (2.0 * M_PI * decomp.shared_var);
  double total = 0.0;
  for (int j = 0; j < decomp.locations.size(); ++j) {
    const double da = x_next - decomp.locations(j);
    const double qa = da * da * inv2v;
    if (qa > 80.0) continue;
    const double db = fx - decomp.locations(j);
    const double arg = qa + db * db * inv2v;
    if (arg > 80.0) continue;
    total += decomp.weights(j) * norm * std::exp(-arg);
  }
  return total;
}

double psg_reconstruction_error(const PsgDecomposition& decomp, double interior) {
  const double center = 0.5 * (decomp.region_lo + decomp.region_hi);
  const double hw = 0.5 * interior * (decomp.region_hi - decomp.region_lo);
  // Resolve both the kernel ridge and the bumps regardless of the rank.
  const double step = std::min(decomp.step, std::sqrt(decomp.base_q)) / 4.0;
  const Eigen::VectorXd nodes = lattice(center - hw, center + hw, step);
  double num = 0.0, den = 0.0;
  for (int a = 0; a < nodes.size(); ++a) {
    for (int b = 0; b < nodes.size(); ++b) {
      const double p = normal_pdf1(nodes(a), nodes(b), decomp.base_q);
      const double diff = p - psg_evaluate(decomp, nodes(a), nodes(b));
      num += diff * diff;
      den += p * p;
    }
  }
  return std::sqrt(num / den);
}

}  // namespace gmf
