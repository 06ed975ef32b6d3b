#include "scalefb/errors.hpp"
#include "scalefb/experiment.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace scalefb;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.environment.dimension = 3;
  c.environment.n_trajectories = 15;
  c.environment.seed = 1;
  c.n_users = 2;
  c.alpha_grid = {0.5, 1.0};
  c.K = 2;
  c.M = 30;
  c.seed = 5;
  c.policies = {{FeedbackKind::scale, {PolicyKind::random, 200, 0}},
                {FeedbackKind::soft_choice, {PolicyKind::info_gain, 200, 0}}};
  c.metrics = {Metric::alignment, Metric::relative_reward};
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing") {
  std::istringstream in(R"(# campaign
env.kind = synthetic
env.dimension = 4
env.n_trajectories = 25
env.seed = 9
n_users = 3
alpha_grid = 0.25, 1.0
sigma = 0.2
epsilon = 0.1
K = 5
M = 40
policies = scale:info_gain, soft_choice:max_regret
metrics = alignment, log_likelihood
seed = 11
sampler.thin = 5
)");
  const ExperimentConfig c = parse_config(in);
  CHECK(c.environment.dimension == 4);
  CHECK(c.environment.n_trajectories == 25);
  CHECK(c.n_users == 3);
  CHECK(c.alpha_grid == std::vector<double>{0.25, 1.0});
  CHECK(c.sigma_true == 0.2);
  CHECK(c.sigma_assumed == 0.2);
  CHECK(c.K == 5);
  REQUIRE(c.policies.size() == 2);
  CHECK(c.policies[0].label() == "scale-info_gain");
  CHECK(c.policies[1].label() == "soft_choice-max_regret");
  CHECK(c.metrics == std::vector<Metric>{Metric::alignment, Metric::log_likelihood});
  CHECK(c.sampler.thin == 5);

  std::istringstream unknown("colour = blue\n");
  CHECK_THROWS_AS(parse_config(unknown), Error);
  std::istringstream bad_alpha("alpha_grid = 1.5\n");
  CHECK_THROWS_AS(parse_config(bad_alpha), Error);
  std::istringstream defaults("");
  CHECK(parse_config(defaults).policies.size() == 6);
}

TEST_CASE("a session with K = 0 reports only the prior estimate") {
  const auto cfg = small_config();
  const auto set = make_environment(cfg.environment);
  Rng rng(3);
  const auto user = random_user(3, 0.5, 0.1, 0.1, rng);
  SessionOptions opts;
  opts.K = 0;
  opts.M = 30;
  const auto h = run_session(user, opts, set, 17);
  CHECK(h.records.empty());
  CHECK(h.estimates.size() == 1);
  CHECK(h.metrics.size() == 1);
}

TEST_CASE("sessions are reproducible from their seed") {
  const auto set = make_environment(small_config().environment);
  Rng rng(3);
  const auto user = random_user(3, 0.5, 0.1, 0.1, rng);
  SessionOptions opts;
  opts.K = 3;
  opts.M = 30;
  opts.metrics = {Metric::alignment, Metric::worst_case_error};
  const auto a = run_session(user, opts, set, 21);
  const auto b = run_session(user, opts, set, 21);
  REQUIRE(a.records.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(a.records[k].mu == b.records[k].mu);
    CHECK(a.queries[k].p == b.queries[k].p);
  }
  for (std::size_t k = 0; k <= 3; ++k) CHECK(a.metrics[k] == b.metrics[k]);
}

TEST_CASE("soft choice sessions answer on the three-point grid") {
  const auto set = make_environment(small_config().environment);
  Rng rng(4);
  const auto user = random_user(3, 0.5, 0.3, 0.1, rng);
  SessionOptions opts;
  opts.feedback = FeedbackKind::soft_choice;
  opts.K = 6;
  opts.M = 30;
  const auto h = run_session(user, opts, set, 8);
  for (const auto& r : h.records) {
    CHECK(r.epsilon == 1.0);
    CHECK((r.mu == -1.0 || r.mu == 0.0 || r.mu == 1.0));
  }
}

TEST_CASE("benchmark counts sessions and writes plot data") {
  auto cfg = small_config();
  const fs::path dir = fs::temp_directory_path() / "scalefb_bench_a";
  fs::remove_all(dir);
  cfg.out_dir = dir.string();
  const auto result = run_benchmark(cfg);
  CHECK(result.curves.size() == 4);
  for (const auto& c : result.curves) {
    CHECK(c.mean.size() == 3);
    for (auto n : c.n) CHECK(n == 4);
  }
  // 2 arms x 2 users x 2 alphas x 3 iterations x 2 metrics.
  CHECK(result.raw.size() == 48);
  std::set<std::pair<std::size_t, double>> sessions;
  for (const auto& r : result.raw) sessions.insert({r.user, r.alpha});
  CHECK(sessions.size() == 4);

  const std::string csv = slurp(dir / "alignment.csv");
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "iteration,policy,mean,sd,n");
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 4);
  }
  CHECK(rows == 6);

  auto again = cfg;
  const fs::path dir2 = fs::temp_directory_path() / "scalefb_bench_b";
  fs::remove_all(dir2);
  again.out_dir = dir2.string();
  again.threads = 2;
  (void)run_benchmark(again);
  CHECK(slurp(dir2 / "alignment.csv") == csv);
  CHECK(slurp(dir2 / "relative_reward.csv") == slurp(dir / "relative_reward.csv"));
}

TEST_CASE("sessions under one seed share users across arms") {
  auto cfg = small_config();
  cfg.K = 1;
  const auto result = run_benchmark(cfg);
  // Before any answer both arms see identical prior estimates.
  REQUIRE(result.curves.size() == 4);
  CHECK(result.curves[0].mean[0] == result.curves[2].mean[0]);
}

TEST_CASE("sigma calibration") {
  auto set = oracle::make_set({{1, 0}, {0, 1}, {-1, 0}, {0.5, 0.5}});
  const std::vector<std::vector<FeedbackRecord>> train{{{{0, 1}, 0.4, 0.1}, {{2, 3}, -0.8, 0.1}}};
  const std::vector<std::vector<FeedbackRecord>> val{{{{0, 2}, 1.0, 0.1}}};
  const auto single = calibrate_sigma(set, train, val, {0.3}, 30, 1);
  CHECK(single.sigma == 0.3);
  CHECK(single.log_likelihood.size() == 1);

  // Mixed steps in validation are scored with their own epsilon.
  const std::vector<std::vector<FeedbackRecord>> mixed{{{{0, 2}, 1.0, 1.0}, {{1, 3}, 0.2, 0.1}}};
  const auto r = calibrate_sigma(set, train, mixed, {0.1, 0.2, 0.4}, 30, 1);
  CHECK(r.grid.size() == 3);
  for (double ll : r.log_likelihood) CHECK(std::isfinite(ll));
  CHECK_THROWS_AS(calibrate_sigma(set, train, {}, {0.1}, 30, 1), Error);
  CHECK(default_sigma_grid().size() == 20);
}
