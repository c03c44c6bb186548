#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "gmf/filters.hpp"
#include "gmf/runners.hpp"
#include "gmf/state_space.hpp"

namespace gmf {

/// Knobs of the Monte-Carlo benchmark. The filters under test arrive as
/// runner objects (each carrying its own parameters and name), so this holds
/// only the experiment-level quantities.
struct BenchmarkConfig {
  int horizon = 50;
  int mc_runs = 100;
  std::uint64_t seed = 1;
  /// Size of the reference particle filter whose cloud stands in for the
  /// true posterior when scoring the density filters.
  int reference_pf_size = 100000;
  /// How many reference particles each density evaluation actually visits
  /// (a deterministic stride through the cloud); <= 0 means all of them.
  int inacc_subsample = 5000;
  /// Divide by the run count inside the RMSE square root (see rmse()).
  bool normalized_rmse = true;
  /// Keep per-run truths and estimates in the result for dumping.
  bool store_run_records = true;
};

/// Per-filter aggregate series; every vector has length horizon, entry k-1
/// describing step k.
struct MetricSeries {
  std::string name;
  bool has_density = false;
  Eigen::VectorXd rmse_k;
  Eigen::VectorXd inacc_k;          // NaN when undefined for this filter/step
  Eigen::VectorXd mean_step_ms_k;   // mean online step duration across runs
  Eigen::VectorXi inacc_infinite;   // runs whose evaluation hit the -inf flag
  double mean_step_ms = 0.0;
  double p50_step_ms = 0.0;
  double p95_step_ms = 0.0;
  int failed_runs = 0;
  // Posterior-weight audit pooled over all surviving runs and steps.
  double max_weight_sum_error = 0.0;
  double min_weight = 0.0;
  double max_clipped_mass = 0.0;
  double mean_active_terms = 0.0;
};

/// Raw material of one Monte-Carlo run: the simulated truth and each
/// filter's estimate track (column k-1 holding step k). A filter that threw
/// mid-run keeps its partial track and an entry in failed_at.
struct RunRecord {
  std::uint64_t sim_seed = 0;
  Eigen::MatrixXd truths;  // state_dim x horizon
  std::map<std::string, Eigen::MatrixXd> estimates;
  std::map<std::string, int> failed_at;  // filter name -> step of failure
};

struct BenchmarkResult {
  BenchmarkConfig config;
  std::vector<MetricSeries> metrics;  // one per runner, in call order
  std::vector<RunRecord> runs;        // empty unless store_run_records
  int reference_failures = 0;         // runs whose reference filter collapsed
};

/// Root-mean-square error per step over a batch of scalar runs (rows = runs,
/// columns = steps): sqrt(mean of squared errors down each column). With
/// normalized = false the column sum is not divided by the run count.
Eigen::VectorXd rmse(const Eigen::MatrixXd& truths, const Eigen::MatrixXd& estimates,
                     bool normalized = true);

struct Inaccuracy {
  double value = 0.0;
  bool degenerate = false;  // some sample saw zero density
};

/// Empirical cross-entropy of a density against a particle cloud:
/// -(1/N) sum_i logpdf(sample_i). Any sample with zero density makes the
/// value +inf and sets the degenerate flag.
Inaccuracy inaccuracy(const ParticleSet& reference,
                      const std::function<double(const Eigen::VectorXd&)>& logpdf);

/// Run every filter over mc_runs simulated trajectories of the model, all
/// filters per run seeing the same measurement sequence, and aggregate RMSE,
/// inaccuracy against the reference particle filter, and per-step wall-clock
/// time (the step() call only — everything else happens outside the timer).
/// Deterministic apart from the timing fields: trajectory, reference and
/// filter RNG streams are derived from config.seed by run counter and a
/// stream id hashed from the filter's name, so adding or removing filters
/// never changes another filter's numbers. A filter that throws loses that
/// run (excluded from its aggregates, counted in failed_runs); a reference
/// collapse only withdraws the run's inaccuracy scores.
BenchmarkResult run_benchmark(const BenchmarkConfig& config, const StateSpaceModel& model,
                              const std::vector<FilterRunner*>& runners);

/// CSV emitters, written atomically (temp file + rename). The results file
/// holds the deterministic columns (k, rmse_<name>, inacc_<name>); timings
/// go to their own file (filter, mean_step_ms, p50_ms, p95_ms) so the
/// results file is byte-reproducible across invocations.
void write_results_csv(const BenchmarkResult& result, const std::string& path);
void write_timing_csv(const BenchmarkResult& result, const std::string& path);

}  // namespace gmf
