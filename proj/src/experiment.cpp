#include "scalefb/experiment.hpp"

#include "scalefb/errors.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <mutex>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

namespace scalefb {

std::string_view to_string(FeedbackKind kind) {
  return kind == FeedbackKind::scale ? "scale" : "soft_choice";
}

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::alignment: return "alignment";
    case Metric::relative_reward: return "relative_reward";
    case Metric::log_likelihood: return "log_likelihood";
    case Metric::worst_case_error: return "worst_case_error";
  }
  return "unknown";
}

FeedbackKind parse_feedback_kind(std::string_view text) {
  if (text == "scale") return FeedbackKind::scale;
  if (text == "soft_choice") return FeedbackKind::soft_choice;
  fail(ErrorCode::invalid_input, "unknown feedback kind '" + std::string(text) + "'");
}

Metric parse_metric(std::string_view text) {
  if (text == "alignment") return Metric::alignment;
  if (text == "relative_reward") return Metric::relative_reward;
  if (text == "log_likelihood") return Metric::log_likelihood;
  if (text == "worst_case_error") return Metric::worst_case_error;
  fail(ErrorCode::invalid_input, "unknown metric '" + std::string(text) + "'");
}

std::string PolicyArm::label() const {
  return std::string(to_string(feedback)) + "-" + std::string(to_string(policy.kind));
}

// ---------------------------------------------------------------------------
// config

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::invalid_input, "config key '" + key + "': expected a number, got '" + value + "'");
  }
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  try {
    if (value.empty() || value[0] == '-') throw std::invalid_argument("negative");
    std::size_t used = 0;
    const auto v = std::stoull(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::invalid_input,
         "config key '" + key + "': expected a non-negative integer, got '" + value + "'");
  }
}

}  // namespace

void validate(const ExperimentConfig& c) {
  if (c.K < 1) fail(ErrorCode::invalid_input, "K must be at least 1");
  if (c.n_users < 1) fail(ErrorCode::invalid_input, "n_users must be at least 1");
  if (c.M < 1) fail(ErrorCode::invalid_input, "M must be at least 1");
  if (c.alpha_grid.empty()) fail(ErrorCode::invalid_input, "alpha_grid must not be empty");
  for (double a : c.alpha_grid) {
    if (!(a > 0.0 && a <= 1.0)) fail(ErrorCode::invalid_input, "alpha_grid values must lie in (0, 1]");
  }
  if (!(c.sigma_true >= 0.0)) fail(ErrorCode::invalid_input, "sigma_true must be non-negative");
  if (!(c.sigma_assumed > 0.0)) fail(ErrorCode::invalid_input, "sigma_assumed must be positive");
  if (!(c.epsilon > 0.0 && c.epsilon <= 1.0)) fail(ErrorCode::invalid_input, "epsilon must lie in (0, 1]");
  if (c.policies.empty()) fail(ErrorCode::invalid_input, "at least one policy is required");
  for (const auto& p : c.policies) {
    if (p.policy.candidate_budget < 1) fail(ErrorCode::invalid_input, "candidate_budget must be at least 1");
  }
  if (c.metrics.empty()) fail(ErrorCode::invalid_input, "at least one metric is required");
  if (std::find(c.metrics.begin(), c.metrics.end(), Metric::log_likelihood) != c.metrics.end() &&
      c.n_validation < 1) {
    fail(ErrorCode::invalid_input, "log_likelihood needs n_validation >= 1");
  }
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  std::size_t budget = 2000;
  std::vector<std::pair<FeedbackKind, PolicyKind>> arms;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::invalid_input, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "env.kind") c.environment.kind = parse_environment_kind(value);
    else if (key == "env.dimension") c.environment.dimension = parse_uint(key, value);
    else if (key == "env.n_trajectories") c.environment.n_trajectories = parse_uint(key, value);
    else if (key == "env.seed") c.environment.seed = parse_uint(key, value);
    else if (key == "env.path") c.environment.path = value;
    else if (key == "n_users") c.n_users = parse_uint(key, value);
    else if (key == "alpha_grid") {
      c.alpha_grid.clear();
      for (const auto& v : split_list(value)) c.alpha_grid.push_back(parse_double(key, v));
    } else if (key == "sigma_true") c.sigma_true = parse_double(key, value);
    else if (key == "sigma_assumed") c.sigma_assumed = parse_double(key, value);
    else if (key == "sigma") c.sigma_true = c.sigma_assumed = parse_double(key, value);
    else if (key == "epsilon") c.epsilon = parse_double(key, value);
    else if (key == "K") c.K = parse_uint(key, value);
    else if (key == "M") c.M = parse_uint(key, value);
    else if (key == "candidate_budget") budget = parse_uint(key, value);
    else if (key == "policies") {
      arms.clear();
      for (const auto& item : split_list(value)) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
          fail(ErrorCode::invalid_input, "policy '" + item + "' must look like feedback:policy");
        }
        arms.emplace_back(parse_feedback_kind(trim(item.substr(0, colon))),
                          parse_policy_kind(trim(item.substr(colon + 1))));
      }
    } else if (key == "metrics") {
      c.metrics.clear();
      for (const auto& v : split_list(value)) c.metrics.push_back(parse_metric(v));
    } else if (key == "seed") c.seed = parse_uint(key, value);
    else if (key == "n_validation") c.n_validation = parse_uint(key, value);
    else if (key == "threads") c.threads = parse_uint(key, value);
    else if (key == "out_dir") c.out_dir = value;
    else if (key == "sampler.w_step") c.sampler.w_step = parse_double(key, value);
    else if (key == "sampler.alpha_step") c.sampler.alpha_step = parse_double(key, value);
    else if (key == "sampler.burn_in_factor") c.sampler.burn_in_factor = parse_uint(key, value);
    else if (key == "sampler.thin") c.sampler.thin = parse_uint(key, value);
    else if (key == "sampler.chains") c.sampler.chains = parse_uint(key, value);
    else if (key == "sampler.init_pool") c.sampler.init_pool = parse_uint(key, value);
    else fail(ErrorCode::invalid_input, "config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  if (arms.empty()) {
    for (auto fb : {FeedbackKind::scale, FeedbackKind::soft_choice})
      for (auto kind : {PolicyKind::info_gain, PolicyKind::max_regret, PolicyKind::random})
        arms.emplace_back(fb, kind);
  }
  for (const auto& [fb, kind] : arms) c.policies.push_back({fb, {kind, budget, 0}});
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open config '" + path + "'");
  ExperimentConfig c = parse_config(in);
  if (const char* env = std::getenv("SCALEFB_SEED"); env && *env) c.seed = parse_uint("SCALEFB_SEED", env);
  return c;
}

// ---------------------------------------------------------------------------
// sessions

namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kNoiseStream = 1;
constexpr std::uint64_t kBeliefStream = 2;
constexpr std::uint64_t kQueryStream = 3;

double metric_value(Metric metric, const Belief& belief, const PosteriorEstimate& est,
                    const SimulatedUser& user, const std::vector<FeedbackRecord>& validation) {
  try {
    switch (metric) {
      case Metric::alignment: return alignment(est.w_hat, user.w_star);
      case Metric::relative_reward: return relative_reward(est.w_hat, user.w_star, belief.set());
      case Metric::log_likelihood: return validation_log_likelihood(validation, belief);
      case Metric::worst_case_error: return worst_case_error(belief, user.w_star, Measure::alignment);
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::degenerate_measure) throw;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

std::uint64_t belief_stream_seed(std::uint64_t session_seed, std::size_t k) {
  return derive_seed(session_seed, {kBeliefStream, k});
}

std::uint64_t query_stream_seed(std::uint64_t session_seed, std::size_t k) {
  return derive_seed(session_seed, {kQueryStream, k + 1});
}

SessionHistory run_session(const SimulatedUser& user, const SessionOptions& options,
                           const std::shared_ptr<const TrajectorySet>& set, std::uint64_t seed) {
  validate(user);
  if (!set) fail(ErrorCode::invalid_input, "session needs a trajectory set");
  if (std::find(options.metrics.begin(), options.metrics.end(), Metric::log_likelihood) !=
          options.metrics.end() &&
      options.validation.empty()) {
    fail(ErrorCode::invalid_input, "log_likelihood metric needs a validation set");
  }
  const bool soft = options.feedback == FeedbackKind::soft_choice;
  const double epsilon = soft ? 1.0 : options.epsilon;
  SimulatedUser responder = user;
  responder.epsilon = epsilon;

  SessionHistory history;
  history.metric_names = options.metrics;
  Rng noise_rng(derive_seed(seed, {kNoiseStream}));

  auto record_iteration = [&](const Belief& belief) {
    const PosteriorEstimate est = mean_weight(belief);
    std::vector<double> values;
    values.reserve(options.metrics.size());
    for (Metric m : options.metrics) values.push_back(metric_value(m, belief, est, user, options.validation));
    history.estimates.push_back(est);
    history.metrics.push_back(std::move(values));
  };

  Rng belief_rng(belief_stream_seed(seed, 0));
  Belief belief = sample_posterior(set, {}, options.sigma_assumed, options.M, belief_rng, options.sampler);
  record_iteration(belief);
  for (std::size_t k = 1; k <= options.K; ++k) {
    Rng query_rng(query_stream_seed(seed, k - 1));
    const Query query = select_query(belief, options.policy, epsilon, query_rng);
    FeedbackRecord rec{query, 0.0, epsilon};
    rec.mu = soft ? static_cast<double>(soft_choice_response(responder, query, *set, noise_rng))
                  : noisy_response(responder, query, *set, noise_rng);
    history.queries.push_back(query);
    history.records.push_back(rec);
    Rng rng(belief_stream_seed(seed, k));
    belief = sample_posterior(set, history.records, options.sigma_assumed, options.M, rng, options.sampler);
    record_iteration(belief);
  }
  return history;
}

// ---------------------------------------------------------------------------
// campaigns

namespace {

constexpr std::uint64_t kUserStream = 100;
constexpr std::uint64_t kSessionStream = 200;
constexpr std::uint64_t kValidationStream = 300;

struct SessionTask {
  std::size_t arm, user, alpha;
};

void run_tasks(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

BenchmarkResult run_benchmark(const ExperimentConfig& config) {
  validate(config);
  const auto set = make_environment(config.environment);
  const std::size_t n_alpha = config.alpha_grid.size();

  std::vector<SimulatedUser> users;
  std::vector<std::vector<FeedbackRecord>> validation(config.n_users * n_alpha);
  const bool need_validation = std::find(config.metrics.begin(), config.metrics.end(),
                                         Metric::log_likelihood) != config.metrics.end();
  for (std::size_t u = 0; u < config.n_users; ++u) {
    Rng rng(derive_seed(config.seed, {kUserStream, u}));
    users.push_back(random_user(set->dimension(), 1.0, config.sigma_true, config.epsilon, rng));
    for (std::size_t a = 0; a < n_alpha; ++a) {
      if (!need_validation) continue;
      SimulatedUser user = users.back();
      user.alpha_star = config.alpha_grid[a];
      Rng vrng(derive_seed(config.seed, {kValidationStream, u, a}));
      auto& val = validation[u * n_alpha + a];
      for (std::size_t i = 0; i < config.n_validation; ++i) {
        const Query q = random_query(*set, vrng);
        val.push_back({q, noisy_response(user, q, *set, vrng), user.epsilon});
      }
    }
  }

  std::vector<SessionTask> tasks;
  for (std::size_t arm = 0; arm < config.policies.size(); ++arm)
    for (std::size_t u = 0; u < config.n_users; ++u)
      for (std::size_t a = 0; a < n_alpha; ++a) tasks.push_back({arm, u, a});

  std::vector<SessionHistory> histories(tasks.size());
  run_tasks(tasks.size(), config.threads, [&](std::size_t i) {
    const auto& t = tasks[i];
    SimulatedUser user = users[t.user];
    user.alpha_star = config.alpha_grid[t.alpha];
    SessionOptions opts;
    opts.feedback = config.policies[t.arm].feedback;
    opts.policy = config.policies[t.arm].policy;
    opts.K = config.K;
    opts.sigma_assumed = config.sigma_assumed;
    opts.epsilon = config.epsilon;
    opts.M = config.M;
    opts.sampler = config.sampler;
    opts.metrics = config.metrics;
    opts.validation = validation[t.user * n_alpha + t.alpha];
    histories[i] = run_session(user, opts, set, derive_seed(config.seed, {kSessionStream, t.user, t.alpha}));
  });

  BenchmarkResult result;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& t = tasks[i];
    const auto label = config.policies[t.arm].label();
    for (std::size_t k = 0; k <= config.K; ++k)
      for (std::size_t m = 0; m < config.metrics.size(); ++m)
        result.raw.push_back({label, t.user, config.alpha_grid[t.alpha], k, config.metrics[m],
                              histories[i].metrics[k][m]});
  }
  for (std::size_t arm = 0; arm < config.policies.size(); ++arm) {
    for (std::size_t m = 0; m < config.metrics.size(); ++m) {
      MetricCurve curve;
      curve.policy = config.policies[arm].label();
      curve.metric = config.metrics[m];
      for (std::size_t k = 0; k <= config.K; ++k) {
        double sum = 0.0, sq = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < tasks.size(); ++i) {
          if (tasks[i].arm != arm) continue;
          const double v = histories[i].metrics[k][m];
          if (std::isnan(v)) continue;
          sum += v;
          ++n;
        }
        const double mean = n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
        for (std::size_t i = 0; i < tasks.size(); ++i) {
          if (tasks[i].arm != arm) continue;
          const double v = histories[i].metrics[k][m];
          if (!std::isnan(v)) sq += (v - mean) * (v - mean);
        }
        curve.mean.push_back(mean);
        curve.sd.push_back(n > 1 ? std::sqrt(sq / static_cast<double>(n - 1)) : 0.0);
        curve.n.push_back(n);
      }
      result.curves.push_back(std::move(curve));
    }
  }

  if (!config.out_dir.empty()) {
    emit_plot_data(result.curves, config.out_dir);
    write_raw_csv(result.raw, (std::filesystem::path(config.out_dir) / "raw.csv").string());
  }
  return result;
}

void emit_plot_data(const std::vector<MetricCurve>& curves, const std::string& out_dir) {
  if (curves.empty()) fail(ErrorCode::invalid_input, "no curves to write");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::io, "cannot create output directory '" + out_dir + "': " + ec.message());
  std::map<Metric, std::vector<const MetricCurve*>> by_metric;
  for (const auto& c : curves) by_metric[c.metric].push_back(&c);
  for (const auto& [metric, list] : by_metric) {
    const auto path = (std::filesystem::path(out_dir) / (std::string(to_string(metric)) + ".csv")).string();
    std::ofstream out(path);
    if (!out) fail(ErrorCode::io, "cannot write '" + path + "'");
    out << "iteration,policy,mean,sd,n\n";
    for (const auto* c : list)
      for (std::size_t k = 0; k < c->mean.size(); ++k)
        out << k << ',' << c->policy << ',' << format_double(c->mean[k]) << ','
            << format_double(c->sd[k]) << ',' << c->n[k] << '\n';
    if (!out) fail(ErrorCode::io, "failed writing '" + path + "'");
  }
}

void write_raw_csv(const std::vector<RawRow>& raw, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write '" + path + "'");
  out << "policy,user,alpha,iteration,metric,value\n";
  for (const auto& r : raw)
    out << r.policy << ',' << r.user << ',' << format_double(r.alpha) << ',' << r.iteration << ','
        << to_string(r.metric) << ',' << format_double(r.value) << '\n';
  if (!out) fail(ErrorCode::io, "failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// sigma calibration

std::vector<double> default_sigma_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 20; ++i) grid.push_back(0.05 * i);
  return grid;
}

CalibrationResult calibrate_sigma(const std::shared_ptr<const TrajectorySet>& set,
                                  const std::vector<std::vector<FeedbackRecord>>& training,
                                  const std::vector<std::vector<FeedbackRecord>>& validation,
                                  const std::vector<double>& grid, std::size_t M, std::uint64_t seed,
                                  const SamplerConfig& sampler) {
  if (!set) fail(ErrorCode::invalid_input, "calibration needs a trajectory set");
  if (grid.empty()) fail(ErrorCode::invalid_input, "sigma grid is empty");
  if (training.empty() || validation.empty()) fail(ErrorCode::invalid_input, "calibration data is empty");
  if (training.size() != validation.size()) {
    fail(ErrorCode::invalid_input, "training and validation must hold the same number of users");
  }
  for (std::size_t i = 0; i < validation.size(); ++i) {
    if (validation[i].empty()) fail(ErrorCode::invalid_input, "empty validation set for a user");
  }
  CalibrationResult result;
  result.grid = grid;
  double best = -std::numeric_limits<double>::infinity();
  for (double sigma : grid) {
    if (!(sigma > 0.0)) fail(ErrorCode::invalid_input, "sigma grid values must be positive");
    double total = 0.0;
    for (std::size_t i = 0; i < training.size(); ++i) {
      // Common random numbers across the grid.
      Rng rng(derive_seed(seed, {i}));
      const Belief belief = sample_posterior(set, training[i], sigma, M, rng, sampler);
      total += validation_log_likelihood(validation[i], belief);
    }
    result.log_likelihood.push_back(total);
    if (total > best) {
      best = total;
      result.sigma = sigma;
    }
  }
  return result;
}

}  // namespace scalefb
