#pragma once

#include "scalefb/belief.hpp"
#include "scalefb/environments.hpp"
#include "scalefb/queries.hpp"
#include "scalefb/user_model.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace scalefb {

enum class FeedbackKind { scale, soft_choice };
enum class Metric { alignment, relative_reward, log_likelihood, worst_case_error };

std::string_view to_string(FeedbackKind kind);
std::string_view to_string(Metric metric);
FeedbackKind parse_feedback_kind(std::string_view text);
Metric parse_metric(std::string_view text);

struct PolicyArm {
  FeedbackKind feedback = FeedbackKind::scale;
  QueryPolicy policy;
  /// "<feedback>-<policy>", e.g. "scale-info_gain".
  std::string label() const;
};

struct ExperimentConfig {
  EnvironmentSpec environment;
  std::size_t n_users = 30;
  std::vector<double> alpha_grid = {0.25, 0.5, 0.75, 1.0};
  double sigma_true = 0.1;
  double sigma_assumed = 0.1;
  double epsilon = 0.1;
  std::size_t K = 20;
  std::vector<PolicyArm> policies;
  std::size_t M = 100;
  std::vector<Metric> metrics = {Metric::alignment, Metric::relative_reward};
  std::uint64_t seed = 0;
  std::size_t n_validation = 10;  // random validation queries per session (log_likelihood)
  std::size_t threads = 1;
  SamplerConfig sampler;
  std::string out_dir;            // empty: no files written
};

/// Throws invalid_input on violated invariants.
void validate(const ExperimentConfig& config);

/// Parses the "key = value" config format (see README). Unknown keys are errors.
ExperimentConfig parse_config(std::istream& in);
/// Reads a config file; SCALEFB_SEED, when set, overrides the seed.
ExperimentConfig load_config(const std::string& path);

struct SessionOptions {
  FeedbackKind feedback = FeedbackKind::scale;
  QueryPolicy policy;
  std::size_t K = 20;
  double sigma_assumed = 0.1;
  double epsilon = 0.1;  // scale step; soft choice always uses 1
  std::size_t M = 100;
  SamplerConfig sampler;
  std::vector<Metric> metrics = {Metric::alignment};
  std::vector<FeedbackRecord> validation;  // needed for Metric::log_likelihood
};

struct SessionHistory {
  std::vector<FeedbackRecord> records;        // K entries
  std::vector<PosteriorEstimate> estimates;   // K + 1 entries, [0] from the prior
  std::vector<Metric> metric_names;
  std::vector<std::vector<double>> metrics;   // [iteration][metric]
  std::vector<Query> queries;                 // K entries
};

/// Seeds of the per-iteration random streams shared by simulated sessions and
/// the feedback service: the belief after k answers and the k-th query choice.
std::uint64_t belief_stream_seed(std::uint64_t session_seed, std::size_t k);
std::uint64_t query_stream_seed(std::uint64_t session_seed, std::size_t k);

/// K rounds of query -> simulated response -> posterior rebuild. All randomness
/// derives from seed; the same seed reproduces the history bit for bit.
SessionHistory run_session(const SimulatedUser& user, const SessionOptions& options,
                           const std::shared_ptr<const TrajectorySet>& set, std::uint64_t seed);

struct MetricCurve {
  std::string policy;
  Metric metric = Metric::alignment;
  std::vector<double> mean;  // K + 1
  std::vector<double> sd;
  std::vector<std::size_t> n;
};

struct RawRow {
  std::string policy;
  std::size_t user = 0;
  double alpha = 0.0;
  std::size_t iteration = 0;
  Metric metric = Metric::alignment;
  double value = 0.0;
};

struct BenchmarkResult {
  std::vector<MetricCurve> curves;
  std::vector<RawRow> raw;
};

/// Runs n_users x |alpha_grid| sessions per policy arm with seeds shared across
/// arms, aggregates curves, and writes CSVs when out_dir is set.
BenchmarkResult run_benchmark(const ExperimentConfig& config);

/// Writes <out_dir>/<metric>.csv with columns iteration,policy,mean,sd,n.
void emit_plot_data(const std::vector<MetricCurve>& curves, const std::string& out_dir);
void write_raw_csv(const std::vector<RawRow>& raw, const std::string& path);

/// Default calibration grid 0.05, 0.10, ..., 1.00.
std::vector<double> default_sigma_grid();

struct CalibrationResult {
  double sigma = 0.0;
  std::vector<double> grid;
  std::vector<double> log_likelihood;  // summed over users, per grid value
};

/// For each sigma: fit a posterior per user on training[i] and score validation[i]
/// under the same sigma; returns the argmax (ties go to the smaller sigma).
CalibrationResult calibrate_sigma(const std::shared_ptr<const TrajectorySet>& set,
                                  const std::vector<std::vector<FeedbackRecord>>& training,
                                  const std::vector<std::vector<FeedbackRecord>>& validation,
                                  const std::vector<double>& grid, std::size_t M, std::uint64_t seed,
                                  const SamplerConfig& sampler = {});

}  // namespace scalefb
