// scalefb: simulation campaigns, sigma calibration, environment generation and
// the live feedback service.

#include "scalefb/dataset_io.hpp"
#include "scalefb/environments.hpp"
#include "scalefb/errors.hpp"
#include "scalefb/experiment.hpp"
#include "scalefb/service.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

using namespace scalefb;

namespace {

int run_bench(const std::string& config_path, const std::string& out_override, std::size_t threads) {
  ExperimentConfig config = load_config(config_path);
  if (!out_override.empty()) config.out_dir = out_override;
  if (threads > 0) config.threads = threads;
  const BenchmarkResult result = run_benchmark(config);
  std::printf("%-24s %-18s %10s %10s %6s\n", "policy", "metric", "mean@0", "mean@K", "n");
  for (const auto& c : result.curves) {
    std::printf("%-24s %-18s %10.4f %10.4f %6zu\n", c.policy.c_str(), std::string(to_string(c.metric)).c_str(),
                c.mean.front(), c.mean.back(), c.n.back());
  }
  if (!config.out_dir.empty()) std::printf("wrote CSVs to %s\n", config.out_dir.c_str());
  return 0;
}

int run_calibrate(const std::string& set_path, const std::string& train, const std::string& val,
                  const std::vector<double>& grid_arg, std::size_t M, std::uint64_t seed) {
  auto set = std::make_shared<const TrajectorySet>(load_trajset(set_path));
  const auto training = load_grouped_dataset(train, *set);
  const auto validation = load_grouped_dataset(val, *set);
  const auto grid = grid_arg.empty() ? default_sigma_grid() : grid_arg;
  const CalibrationResult r = calibrate_sigma(set, training, validation, grid, M, seed);
  for (std::size_t i = 0; i < r.grid.size(); ++i) {
    std::printf("sigma=%.2f  validation_log_likelihood=%.6f\n", r.grid[i], r.log_likelihood[i]);
  }
  std::printf("best sigma: %.2f\n", r.sigma);
  return 0;
}

int run_gen_env(const std::string& kind, const std::string& out, std::size_t n, std::size_t dim,
                std::uint64_t seed) {
  EnvironmentSpec spec;
  spec.kind = parse_environment_kind(kind);
  if (spec.kind == EnvironmentKind::file) fail(ErrorCode::invalid_input, "gen-env supports synthetic or fetch");
  spec.n_trajectories = n;
  spec.dimension = dim;
  spec.seed = seed;
  const auto set = make_environment(spec);
  save_trajset(*set, out);
  std::printf("wrote %zu trajectories of dimension %zu to %s\n", set->size(), set->dimension(), out.c_str());
  return 0;
}

int run_serve(const std::string& sets_dir, const std::vector<std::string>& set_files,
              const std::string& data_dir, const std::string& host, int port, std::size_t M,
              const std::string& ui_dir) {
  SetRegistry sets;
  if (!sets_dir.empty()) sets = load_set_directory(sets_dir);
  for (const auto& spec : set_files) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) fail(ErrorCode::invalid_input, "--set expects id=path, got '" + spec + "'");
    sets[spec.substr(0, eq)] = std::make_shared<const TrajectorySet>(load_trajset(spec.substr(eq + 1)));
  }
  if (sets.empty()) fail(ErrorCode::invalid_input, "no trajectory sets registered (use --sets-dir or --set)");
  FeedbackService service({data_dir, M, {}}, std::move(sets));
  HttpFrontend http(service, ui_dir);
  std::printf("serving %zu session(s) on http://%s:%d\n", service.session_ids().size(), host.c_str(), port);
  std::fflush(stdout);
  http.listen(host, port);
  return 0;
}

int run_replay(const std::string& log, const std::vector<std::string>& set_files, const std::string& sets_dir) {
  SetRegistry sets;
  if (!sets_dir.empty()) sets = load_set_directory(sets_dir);
  for (const auto& spec : set_files) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) fail(ErrorCode::invalid_input, "--set expects id=path, got '" + spec + "'");
    sets[spec.substr(0, eq)] = std::make_shared<const TrajectorySet>(load_trajset(spec.substr(eq + 1)));
  }
  const ReplayResult r = replay_session_log(log, sets);
  nlohmann::json out = {{"session_id", r.session_id},
                        {"iteration", r.history.size()},
                        {"w_hat", std::vector<double>(r.estimate.w_hat.data(),
                                                      r.estimate.w_hat.data() + r.estimate.w_hat.size())},
                        {"alpha_hat", r.estimate.alpha_hat}};
  std::cout << out.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scalefb: active reward learning from slider feedback"};
  app.require_subcommand(1);

  auto* bench = app.add_subcommand("bench", "run a simulation campaign");
  std::string config_path, out_dir;
  std::size_t threads = 0;
  bench->add_option("--config", config_path, "campaign config file")->required()->check(CLI::ExistingFile);
  bench->add_option("--out", out_dir, "output directory (overrides out_dir)");
  bench->add_option("--threads", threads, "worker threads (overrides threads)");

  auto* calibrate = app.add_subcommand("calibrate", "grid-search the response noise sigma");
  std::string set_path, train, val;
  std::vector<double> grid;
  std::size_t M = 200;
  std::uint64_t seed = 0;
  calibrate->add_option("--set", set_path, "trajectory set file")->required()->check(CLI::ExistingFile);
  calibrate->add_option("--train", train, "training records (JSON lines)")->required()->check(CLI::ExistingFile);
  calibrate->add_option("--val", val, "validation records (JSON lines)")->required()->check(CLI::ExistingFile);
  calibrate->add_option("--grid", grid, "sigma values (default 0.05..1.00 step 0.05)");
  calibrate->add_option("--samples", M, "posterior samples per fit");
  calibrate->add_option("--seed", seed, "sampler seed");

  auto* gen = app.add_subcommand("gen-env", "generate a trajectory set file");
  std::string kind = "synthetic", env_out;
  std::size_t n = 200, dim = 10;
  std::uint64_t env_seed = 0;
  gen->add_option("--kind", kind, "synthetic or fetch")->check(CLI::IsMember({"synthetic", "fetch"}));
  gen->add_option("--out", env_out, "output path")->required();
  gen->add_option("--n", n, "number of trajectories");
  gen->add_option("--dim", dim, "feature dimension (synthetic)");
  gen->add_option("--seed", env_seed, "generator seed");

  auto* serve = app.add_subcommand("serve", "run the HTTP feedback service");
  std::string sets_dir, data_dir = "sessions", host = "127.0.0.1", ui_dir;
  std::vector<std::string> set_files;
  int port = 8080;
  std::size_t serve_M = 100;
  serve->add_option("--sets-dir", sets_dir, "directory of <id>.jsonl trajectory sets");
  serve->add_option("--set", set_files, "register a set as id=path (repeatable)");
  serve->add_option("--data-dir", data_dir, "session log directory");
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--samples", serve_M, "posterior samples per rebuild");
  serve->add_option("--ui-dir", ui_dir, "static files served at /");

  auto* replay = app.add_subcommand("replay", "rebuild a session estimate from its event log");
  std::string log_path;
  std::vector<std::string> replay_sets;
  std::string replay_sets_dir;
  replay->add_option("--log", log_path, "session event log")->required()->check(CLI::ExistingFile);
  replay->add_option("--set", replay_sets, "register a set as id=path (repeatable)");
  replay->add_option("--sets-dir", replay_sets_dir, "directory of <id>.jsonl trajectory sets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*bench) return run_bench(config_path, out_dir, threads);
    if (*calibrate) return run_calibrate(set_path, train, val, grid, M, seed);
    if (*gen) return run_gen_env(kind, env_out, n, dim, env_seed);
    if (*serve) return run_serve(sets_dir, set_files, data_dir, host, port, serve_M, ui_dir);
    if (*replay) return run_replay(log_path, replay_sets, replay_sets_dir);
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", std::string(to_string(e.code())).c_str(), e.what());
    return 1;
  }
  return 0;
}
