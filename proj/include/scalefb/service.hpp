#pragma once

#include "scalefb/belief.hpp"
#include "scalefb/queries.hpp"
#include "scalefb/trajectory.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace scalefb {

using SetRegistry = std::map<std::string, std::shared_ptr<const TrajectorySet>>;

struct ServiceConfig {
  std::string data_dir;   // one <id>.jsonl event log and <id>.snapshot.json per session
  std::size_t M = 100;    // posterior samples per rebuild
  SamplerConfig sampler;
};

/// Elicitation sessions over registered trajectory sets. Every mutation is
/// appended to the session's event log before it becomes visible, and the
/// belief after k answers is a pure function of (history[0..k), seed), so a
/// restarted service (or an offline replay) rebuilds identical state.
///
/// Methods take and return the JSON bodies of the HTTP API and throw Error;
/// the HTTP frontend maps error codes to statuses.
class FeedbackService {
 public:
  FeedbackService(ServiceConfig config, SetRegistry sets);
  ~FeedbackService();

  FeedbackService(const FeedbackService&) = delete;
  FeedbackService& operator=(const FeedbackService&) = delete;

  /// {"sets": [{"id", "dimension", "size"}]}
  nlohmann::json list_sets() const;
  /// Request {set_id, policy: {kind, candidate_budget?, seed?}, sigma, epsilon}
  /// -> {"session_id"}
  nlohmann::json create_session(const nlohmann::json& request);
  /// -> {iteration, query: {p, q}, trajectories: [...], epsilon, grid}
  nlohmann::json next_query(const std::string& session_id);
  /// Request {mu} -> {iteration, w_hat, alpha_hat}
  nlohmann::json submit_feedback(const std::string& session_id, const nlohmann::json& request);
  /// -> {iteration, w_hat, alpha_hat, best_trajectory}
  nlohmann::json get_estimate(const std::string& session_id) const;

  std::vector<FeedbackRecord> history(const std::string& session_id) const;
  std::vector<std::string> session_ids() const;

 private:
  struct Session;
  std::shared_ptr<Session> find(const std::string& session_id) const;
  void load_existing();

  ServiceConfig config_;
  SetRegistry sets_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_number_ = 1;
};

struct ReplayResult {
  std::string session_id;
  std::vector<FeedbackRecord> history;
  std::optional<Query> pending;
  PosteriorEstimate estimate;
  std::shared_ptr<const Belief> belief;
};

/// Rebuilds a session from its event log alone.
ReplayResult replay_session_log(const std::string& log_path, const SetRegistry& sets,
                                const SamplerConfig& sampler = {});

/// Registers every *.jsonl trajectory set in dir under its file stem.
SetRegistry load_set_directory(const std::string& dir);

/// HTTP+JSON frontend for a FeedbackService.
class HttpFrontend {
 public:
  explicit HttpFrontend(FeedbackService& service, std::string static_dir = {});
  ~HttpFrontend();

  /// Binds and serves on a background thread; port 0 picks a free port.
  /// Returns the bound port.
  int start(const std::string& host, int port);
  /// Serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace scalefb
