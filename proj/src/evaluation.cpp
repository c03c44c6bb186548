#include "gmf/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gmf/errors.hpp"
#include "gmf/rng.hpp"

namespace gmf {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

/// FNV-1a of the filter name, pushed above the reserved low stream ids
/// (0 = trajectory, 1 = reference filter). Keyed by name so a filter's
/// random stream never depends on which other filters are benchmarked.
std::uint64_t filter_stream(const std::string& name) {
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h | 0x8000000000000000ull;
}

double percentile(std::vector<double> samples, double p) {
  if (samples.empty()) return 0.0;
  std::sort(samples.begin(), samples.end());
  const double pos = p * (static_cast<double>(samples.size()) - 1.0);
  const size_t lo = static_cast<size_t>(pos);
  if (lo + 1 >= samples.size()) return samples.back();
  const double frac = pos - static_cast<double>(lo);
  return samples[lo] + frac * (samples[lo + 1] - samples[lo]);
}

std::string format_cell(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0.0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot open '" + tmp + "' for writing");
    out << content;
    out.flush();
    if (!out) throw ParseError("failed while writing '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

Eigen::VectorXd rmse(const Eigen::MatrixXd& truths, const Eigen::MatrixXd& estimates,
                     bool normalized) {
  if (truths.rows() != estimates.rows() || truths.cols() != estimates.cols())
    throw DimensionError("rmse needs matching truth/estimate batches, got " +
                         std::to_string(truths.rows()) + "x" + std::to_string(truths.cols()) +
                         " vs " + std::to_string(estimates.rows()) + "x" +
                         std::to_string(estimates.cols()));
  if (truths.rows() == 0) throw DimensionError("rmse needs at least one run");
  Eigen::VectorXd out(truths.cols());
  for (int k = 0; k < truths.cols(); ++k) {
    double sum = 0.0;
    for (int r = 0; r < truths.rows(); ++r) {
      const double d = truths(r, k) - estimates(r, k);
      sum += d * d;
    }
    out(k) = std::sqrt(normalized ? sum / static_cast<double>(truths.rows()) : sum);
  }
  return out;
}

Inaccuracy inaccuracy(const ParticleSet& reference,
                      const std::function<double(const Eigen::VectorXd&)>& logpdf) {
  const int n = static_cast<int>(reference.samples.cols());
  if (n == 0) throw DimensionError("inaccuracy needs a non-empty reference cloud");
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double ld = logpdf(reference.samples.col(i));
    if (!std::isfinite(ld)) return {kInf, true};
    sum += ld;
  }
  return {-sum / static_cast<double>(n), false};
}

BenchmarkResult run_benchmark(const BenchmarkConfig& config, const StateSpaceModel& model,
                              const std::vector<FilterRunner*>& runners) {
  if (config.horizon < 1) throw ConfigError("benchmark horizon must be at least 1");
  if (config.mc_runs < 1) throw ConfigError("benchmark needs at least one run");
  if (runners.empty()) throw ConfigError("benchmark needs at least one filter");
  {
    std::set<std::string> names;
    for (const FilterRunner* r : runners)
      if (!names.insert(r->name()).second)
        throw ConfigError("duplicate filter name '" + r->name() + "' in benchmark");
  }

  const int K = config.horizon;
  const int M = config.mc_runs;
  const int F = static_cast<int>(runners.size());
  const int dim = model.state_dim();
  const int n_ref = std::max(2, config.reference_pf_size);
  const int stride =
      config.inacc_subsample <= 0 ? 1 : std::max(1, n_ref / config.inacc_subsample);
  const int n_sub = (n_ref + stride - 1) / stride;
  const bool any_density =
      std::any_of(runners.begin(), runners.end(),
                  [](const FilterRunner* r) { return r->has_density(); });

  BenchmarkResult result;
  result.config = config;

  // Per-filter accumulators across runs.
  std::vector<Eigen::MatrixXd> err2(F, Eigen::MatrixXd(M, K));  // squared error norms
  std::vector<std::vector<int>> surviving(F);
  std::vector<Eigen::MatrixXd> inacc_sum(F, Eigen::MatrixXd::Zero(1, K));
  std::vector<Eigen::VectorXi> inacc_cnt(F, Eigen::VectorXi::Zero(K));
  std::vector<Eigen::VectorXi> inacc_inf(F, Eigen::VectorXi::Zero(K));
  std::vector<std::vector<double>> step_ms(F);
  std::vector<Eigen::VectorXd> step_ms_sum(F, Eigen::VectorXd::Zero(K));
  std::vector<Eigen::VectorXi> step_ms_cnt(F, Eigen::VectorXi::Zero(K));
  std::vector<double> max_wsum_err(F, 0.0), min_weight(F, kInf), max_clip(F, 0.0);
  std::vector<double> active_sum(F, 0.0);
  std::vector<long> active_cnt(F, 0);
  std::vector<int> failed_runs(F, 0);

  ParticleSet sub;
  if (any_density) {
    sub.samples.resize(dim, n_sub);
    sub.weights = Eigen::VectorXd::Constant(n_sub, 1.0 / n_sub);
  }

  for (int run = 0; run < M; ++run) {
    const std::uint64_t sim_seed = seeded_engine(config.seed, run, 0)();
    const Trajectory traj = simulate(model, K, sim_seed);

    std::mt19937_64 ref_rng = seeded_engine(config.seed, run, 1);
    ParticleSet reference = make_particle_set(model.prior(), n_ref, ref_rng);
    bool ref_ok = true;

    RunRecord record;
    record.sim_seed = sim_seed;
    record.truths = traj.states.block(0, 1, dim, K);

    std::vector<int> failed_step(F, 0);
    std::vector<Eigen::MatrixXd> estimates(F, Eigen::MatrixXd::Constant(dim, K, kNan));
    // Inaccuracy is buffered and only committed when the reference survives
    // the whole run (and the filter does too).
    Eigen::MatrixXd inacc_buf = Eigen::MatrixXd::Constant(F, K, kNan);
    Eigen::MatrixXi inacc_buf_inf = Eigen::MatrixXi::Zero(F, K);

    for (int f = 0; f < F; ++f)
      runners[f]->reset(model, seeded_engine(config.seed, run, filter_stream(runners[f]->name()))());

    for (int k = 1; k <= K; ++k) {
      const Eigen::VectorXd z = traj.observations.col(k - 1);

      if (ref_ok) {
        try {
          reference = pf_step(reference, z, model, k - 1, ref_rng);
        } catch (const Error&) {
          ref_ok = false;
          ++result.reference_failures;
        }
      }
      if (ref_ok && any_density)
        for (int i = 0, j = 0; i < n_ref; i += stride, ++j) sub.samples.col(j) =
            reference.samples.col(i);

      for (int f = 0; f < F; ++f) {
        if (failed_step[f] != 0) continue;
        FilterRunner& runner = *runners[f];
        const auto t0 = std::chrono::steady_clock::now();
        try {
          runner.step(z, k);
        } catch (const Error&) {
          failed_step[f] = k;
          record.failed_at[runner.name()] = k;
          continue;
        }
        const auto t1 = std::chrono::steady_clock::now();
        const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        step_ms[f].push_back(ms);
        step_ms_sum[f](k - 1) += ms;
        step_ms_cnt[f](k - 1) += 1;

        estimates[f].col(k - 1) = runner.estimate();

        const StepDiagnostics& diag = runner.diagnostics();
        max_wsum_err[f] = std::max(max_wsum_err[f], std::abs(diag.weight_sum - 1.0));
        min_weight[f] = std::min(min_weight[f], diag.min_weight);
        max_clip[f] = std::max(max_clip[f], diag.clipped_mass);
        active_sum[f] += diag.active_terms;
        ++active_cnt[f];

        if (ref_ok && runner.has_density()) {
          const Inaccuracy score =
              inaccuracy(sub, [&](const Eigen::VectorXd& x) { return runner.log_density(x); });
          if (score.degenerate)
            inacc_buf_inf(f, k - 1) = 1;
          else
            inacc_buf(f, k - 1) = score.value;
        }
      }
    }

    for (int f = 0; f < F; ++f) {
      if (failed_step[f] != 0) {
        ++failed_runs[f];
      } else {
        for (int k = 0; k < K; ++k)
          err2[f](run, k) = (record.truths.col(k) - estimates[f].col(k)).squaredNorm();
        surviving[f].push_back(run);
        if (ref_ok)
          for (int k = 0; k < K; ++k) {
            if (inacc_buf_inf(f, k) != 0)
              inacc_inf[f](k) += 1;
            else if (!std::isnan(inacc_buf(f, k))) {
              inacc_sum[f](0, k) += inacc_buf(f, k);
              inacc_cnt[f](k) += 1;
            }
          }
      }
      record.estimates[runners[f]->name()] = estimates[f];
    }
    if (config.store_run_records) result.runs.push_back(std::move(record));
  }

  for (int f = 0; f < F; ++f) {
    MetricSeries m;
    m.name = runners[f]->name();
    m.has_density = runners[f]->has_density();
    m.failed_runs = failed_runs[f];

    const int S = static_cast<int>(surviving[f].size());
    m.rmse_k = Eigen::VectorXd::Constant(K, kNan);
    if (S > 0) {
      if (dim == 1 && config.store_run_records) {
        // Scalar runs go through the public reduction so the published
        // series is bit-identical to rmse() applied to the run records.
        Eigen::MatrixXd truths(S, K), estimates(S, K);
        for (int s = 0; s < S; ++s) {
          const RunRecord& rec = result.runs[surviving[f][s]];
          truths.row(s) = rec.truths.row(0);
          estimates.row(s) = rec.estimates.at(m.name).row(0);
        }
        m.rmse_k = rmse(truths, estimates, config.normalized_rmse);
      } else {
        for (int k = 0; k < K; ++k) {
          double sum = 0.0;
          for (const int run : surviving[f]) sum += err2[f](run, k);
          m.rmse_k(k) = std::sqrt(config.normalized_rmse ? sum / S : sum);
        }
      }
    }

    m.inacc_k = Eigen::VectorXd::Constant(K, kNan);
    m.inacc_infinite = inacc_inf[f];
    for (int k = 0; k < K; ++k)
      if (inacc_cnt[f](k) > 0) m.inacc_k(k) = inacc_sum[f](0, k) / inacc_cnt[f](k);

    m.mean_step_ms_k = Eigen::VectorXd::Constant(K, kNan);
    for (int k = 0; k < K; ++k)
      if (step_ms_cnt[f](k) > 0) m.mean_step_ms_k(k) = step_ms_sum[f](k) / step_ms_cnt[f](k);
    if (!step_ms[f].empty()) {
      double total = 0.0;
      for (const double ms : step_ms[f]) total += ms;
      m.mean_step_ms = total / static_cast<double>(step_ms[f].size());
      m.p50_step_ms = percentile(step_ms[f], 0.50);
      m.p95_step_ms = percentile(step_ms[f], 0.95);
    }

    m.max_weight_sum_error = max_wsum_err[f];
    m.min_weight = std::isfinite(min_weight[f]) ? min_weight[f] : 0.0;
    m.max_clipped_mass = max_clip[f];
    m.mean_active_terms =
        active_cnt[f] > 0 ? active_sum[f] / static_cast<double>(active_cnt[f]) : 0.0;
    result.metrics.push_back(std::move(m));
  }
  return result;
}

void write_results_csv(const BenchmarkResult& result, const std::string& path) {
  std::ostringstream out;
  out << "k";
  for (const MetricSeries& m : result.metrics) out << ",rmse_" << m.name << ",inacc_" << m.name;
  out << "\n";
  const int K = result.metrics.empty() ? 0 : static_cast<int>(result.metrics[0].rmse_k.size());
  for (int k = 0; k < K; ++k) {
    out << (k + 1);
    for (const MetricSeries& m : result.metrics)
      out << "," << format_cell(m.rmse_k(k)) << "," << format_cell(m.inacc_k(k));
    out << "\n";
  }
  atomic_write(path, out.str());
}

void write_timing_csv(const BenchmarkResult& result, const std::string& path) {
  std::ostringstream out;
  out << "filter,mean_step_ms,p50_ms,p95_ms\n";
  for (const MetricSeries& m : result.metrics)
    out << m.name << "," << format_cell(m.mean_step_ms) << "," << format_cell(m.p50_step_ms)
        << "," << format_cell(m.p95_step_ms) << "\n";
  atomic_write(path, out.str());
}

}  // namespace gmf
