#include "scalefb/service.hpp"

#include "scalefb/dataset_io.hpp"
#include "scalefb/environments.hpp"
#include "scalefb/errors.hpp"
#include "scalefb/experiment.hpp"
#include "scalefb/user_model.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>

namespace scalefb {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void require_keys(const json& obj, std::initializer_list<const char*> required,
                  std::initializer_list<const char*> optional, const std::string& what) {
  if (!obj.is_object()) fail(ErrorCode::invalid_input, what + " must be a JSON object");
  std::set<std::string> allowed;
  for (const char* k : required) {
    allowed.insert(k);
    if (!obj.contains(k)) fail(ErrorCode::invalid_input, what + " is missing \"" + k + "\"");
  }
  for (const char* k : optional) allowed.insert(k);
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      fail(ErrorCode::invalid_input, what + " has unknown field \"" + item.key() + "\"");
    }
  }
}

// nlohmann stores small non-negative literals as signed integers.
bool non_negative_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

json trajectory_json(const Trajectory& t) {
  return {{"id", t.id},
          {"features", std::vector<double>(t.features.data(), t.features.data() + t.features.size())},
          {"label", t.label ? json(*t.label) : json(nullptr)},
          {"media_ref", t.media_ref ? json(*t.media_ref) : json(nullptr)}};
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json policy_json(const QueryPolicy& p) {
  return {{"kind", to_string(p.kind)}, {"candidate_budget", p.candidate_budget}, {"seed", p.seed}};
}

/// Belief after the given answers; depends only on (history, seed).
std::shared_ptr<const Belief> rebuild_belief(const std::shared_ptr<const TrajectorySet>& set,
                                             const std::vector<FeedbackRecord>& history, double sigma,
                                             std::size_t M, std::uint64_t seed,
                                             const SamplerConfig& sampler) {
  Rng rng(belief_stream_seed(seed, history.size()));
  return std::make_shared<const Belief>(sample_posterior(set, history, sigma, M, rng, sampler));
}

void append_line(const std::string& path, const json& event) {
  std::ofstream out(path, std::ios::app);
  if (!out) fail(ErrorCode::io, "cannot append to session log '" + path + "'");
  out << event.dump() << '\n';
  out.flush();
  if (!out) fail(ErrorCode::io, "failed writing session log '" + path + "'");
}

struct CreatedEvent {
  std::string session_id, set_id, created;
  QueryPolicy policy;
  double sigma = 0.0, epsilon = 0.0;
  std::size_t M = 0;
};

CreatedEvent parse_created(const json& e) {
  CreatedEvent c;
  c.session_id = e.at("session_id").get<std::string>();
  c.set_id = e.at("set_id").get<std::string>();
  c.created = e.value("created", "");
  const auto& p = e.at("policy");
  c.policy.kind = parse_policy_kind(p.at("kind").get<std::string>());
  c.policy.candidate_budget = p.at("candidate_budget").get<std::size_t>();
  c.policy.seed = p.at("seed").get<std::uint64_t>();
  c.sigma = e.at("sigma").get<double>();
  c.epsilon = e.at("epsilon").get<double>();
  c.M = e.at("M").get<std::size_t>();
  return c;
}

}  // namespace

struct FeedbackService::Session {
  std::mutex mutex;
  CreatedEvent meta;
  std::shared_ptr<const TrajectorySet> set;
  std::string updated;
  std::vector<FeedbackRecord> history;
  std::optional<Query> pending;
  std::shared_ptr<const Belief> belief;
  std::string log_path;
  std::string snapshot_path;
};

FeedbackService::FeedbackService(ServiceConfig config, SetRegistry sets)
    : config_(std::move(config)), sets_(std::move(sets)) {
  if (config_.data_dir.empty()) fail(ErrorCode::invalid_input, "service needs a data directory");
  if (config_.M < 1) fail(ErrorCode::invalid_input, "service sample count must be at least 1");
  std::error_code ec;
  fs::create_directories(config_.data_dir, ec);
  if (ec) fail(ErrorCode::io, "cannot create data directory '" + config_.data_dir + "': " + ec.message());
  load_existing();
}

FeedbackService::~FeedbackService() = default;

void FeedbackService::load_existing() {
  std::vector<fs::path> logs;
  for (const auto& entry : fs::directory_iterator(config_.data_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") logs.push_back(entry.path());
  }
  std::sort(logs.begin(), logs.end());
  for (const auto& path : logs) {
    ReplayResult r = replay_session_log(path.string(), sets_, config_.sampler);
    auto s = std::make_shared<Session>();
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    s->meta = parse_created(json::parse(first));
    s->set = sets_.at(s->meta.set_id);
    s->history = std::move(r.history);
    s->pending = r.pending;
    s->belief = r.belief;
    s->updated = s->meta.created;
    s->log_path = path.string();
    s->snapshot_path = (fs::path(config_.data_dir) / (s->meta.session_id + ".snapshot.json")).string();
    const auto& id = s->meta.session_id;
    if (id.rfind("s-", 0) == 0) {
      try {
        next_number_ = std::max<std::uint64_t>(next_number_, std::stoull(id.substr(2)) + 1);
      } catch (const std::exception&) {
      }
    }
    sessions_.emplace(id, std::move(s));
  }
}

std::shared_ptr<FeedbackService::Session> FeedbackService::find(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) fail(ErrorCode::not_found, "unknown session '" + session_id + "'");
  return it->second;
}

json FeedbackService::list_sets() const {
  json out = json::array();
  for (const auto& [id, set] : sets_) {
    out.push_back({{"id", id}, {"dimension", set->dimension()}, {"size", set->size()}});
  }
  return {{"sets", out}};
}

json FeedbackService::create_session(const json& request) {
  require_keys(request, {"set_id", "policy", "sigma", "epsilon"}, {}, "session request");
  if (!request["set_id"].is_string()) fail(ErrorCode::invalid_input, "\"set_id\" must be a string");
  const auto set_id = request["set_id"].get<std::string>();
  auto set_it = sets_.find(set_id);
  if (set_it == sets_.end()) fail(ErrorCode::not_found, "unknown trajectory set '" + set_id + "'");

  const json& p = request["policy"];
  require_keys(p, {"kind"}, {"candidate_budget", "seed"}, "policy");
  if (!p["kind"].is_string()) fail(ErrorCode::invalid_input, "policy \"kind\" must be a string");
  QueryPolicy policy;
  policy.kind = parse_policy_kind(p["kind"].get<std::string>());
  if (p.contains("candidate_budget")) {
    if (!non_negative_integer(p["candidate_budget"]) || p["candidate_budget"].get<std::size_t>() < 1) {
      fail(ErrorCode::invalid_input, "policy \"candidate_budget\" must be a positive integer");
    }
    policy.candidate_budget = p["candidate_budget"].get<std::size_t>();
  }
  if (!request["sigma"].is_number() || !(request["sigma"].get<double>() > 0.0)) {
    fail(ErrorCode::invalid_input, "\"sigma\" must be a positive number");
  }
  if (!request["epsilon"].is_number()) fail(ErrorCode::invalid_input, "\"epsilon\" must be a number");
  const double sigma = request["sigma"].get<double>();
  const double epsilon = request["epsilon"].get<double>();
  const SliderGrid grid(epsilon);  // validates the step
  (void)grid;

  auto s = std::make_shared<Session>();
  {
    std::lock_guard lock(mutex_);
    const std::uint64_t number = next_number_++;
    if (p.contains("seed")) {
      if (!non_negative_integer(p["seed"])) fail(ErrorCode::invalid_input, "policy \"seed\" must be a non-negative integer");
      policy.seed = p["seed"].get<std::uint64_t>();
    } else {
      policy.seed = derive_seed(number, {0x5e55});
    }
    s->meta.session_id = "s-" + std::to_string(number);
  }
  s->meta.set_id = set_id;
  s->meta.policy = policy;
  s->meta.sigma = sigma;
  s->meta.epsilon = epsilon;
  s->meta.M = config_.M;
  s->meta.created = now_utc();
  s->updated = s->meta.created;
  s->set = set_it->second;
  s->log_path = (fs::path(config_.data_dir) / (s->meta.session_id + ".jsonl")).string();
  s->snapshot_path = (fs::path(config_.data_dir) / (s->meta.session_id + ".snapshot.json")).string();
  s->belief = rebuild_belief(s->set, {}, sigma, config_.M, policy.seed, config_.sampler);

  append_line(s->log_path, {{"event", "created"},
                            {"session_id", s->meta.session_id},
                            {"set_id", set_id},
                            {"policy", policy_json(policy)},
                            {"sigma", sigma},
                            {"epsilon", epsilon},
                            {"M", config_.M},
                            {"created", s->meta.created}});
  const std::string id = s->meta.session_id;
  {
    std::lock_guard lock(mutex_);
    sessions_.emplace(id, std::move(s));
  }
  return {{"session_id", id}};
}

json FeedbackService::next_query(const std::string& session_id) {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  if (!s->pending) {
    Rng rng(query_stream_seed(s->meta.policy.seed, s->history.size()));
    const Query q = select_query(*s->belief, s->meta.policy, s->meta.epsilon, rng);
    append_line(s->log_path, {{"event", "query"},
                              {"iteration", s->history.size()},
                              {"p_id", (*s->set)[q.p].id},
                              {"q_id", (*s->set)[q.q].id}});
    s->pending = q;
  }
  const SliderGrid grid(s->meta.epsilon);
  const auto pts = grid.points();
  return {{"iteration", s->history.size()},
          {"query", {{"p", (*s->set)[s->pending->p].id}, {"q", (*s->set)[s->pending->q].id}}},
          {"trajectories", {trajectory_json((*s->set)[s->pending->p]), trajectory_json((*s->set)[s->pending->q])}},
          {"epsilon", s->meta.epsilon},
          {"grid", std::vector<double>(pts.begin(), pts.end())}};
}

json FeedbackService::submit_feedback(const std::string& session_id, const json& request) {
  require_keys(request, {"mu"}, {}, "feedback request");
  if (!request["mu"].is_number()) fail(ErrorCode::invalid_input, "\"mu\" must be a number");
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  if (!s->pending) fail(ErrorCode::conflict, "session '" + session_id + "' has no pending query");
  const SliderGrid grid(s->meta.epsilon);
  const double raw = request["mu"].get<double>();
  const auto idx = grid.index_of(raw);
  if (!idx) {
    std::string points;
    for (double v : grid.points()) points += (points.empty() ? "" : ", ") + json(v).dump();
    fail(ErrorCode::invalid_input, "mu " + json(raw).dump() + " is not on the slider grid {" + points + "}");
  }
  FeedbackRecord rec{*s->pending, grid.points()[*idx], s->meta.epsilon};
  auto history = s->history;
  history.push_back(rec);
  auto belief = rebuild_belief(s->set, history, s->meta.sigma, s->meta.M, s->meta.policy.seed,
                               config_.sampler);
  const PosteriorEstimate est = mean_weight(*belief);

  json event = record_to_json(rec, *s->set);
  event["event"] = "feedback";
  event["iteration"] = history.size();
  event["updated"] = now_utc();
  append_line(s->log_path, event);

  s->history = std::move(history);
  s->belief = std::move(belief);
  s->pending.reset();
  s->updated = event["updated"].get<std::string>();

  json snapshot = {{"session_id", s->meta.session_id},
                   {"set_id", s->meta.set_id},
                   {"policy", policy_json(s->meta.policy)},
                   {"sigma", s->meta.sigma},
                   {"epsilon", s->meta.epsilon},
                   {"created", s->meta.created},
                   {"updated", s->updated},
                   {"history", json::array()},
                   {"belief", belief_to_json(*s->belief)}};
  for (const auto& r : s->history) snapshot["history"].push_back(record_to_json(r, *s->set));
  const std::string tmp = s->snapshot_path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) fail(ErrorCode::io, "cannot write snapshot '" + tmp + "'");
    out << snapshot.dump() << '\n';
  }
  std::error_code ec;
  fs::rename(tmp, s->snapshot_path, ec);
  if (ec) fail(ErrorCode::io, "cannot move snapshot into place: " + ec.message());

  return {{"iteration", s->history.size()}, {"w_hat", vector_json(est.w_hat)}, {"alpha_hat", est.alpha_hat}};
}

json FeedbackService::get_estimate(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  const PosteriorEstimate est = mean_weight(*s->belief);
  return {{"iteration", s->history.size()},
          {"w_hat", vector_json(est.w_hat)},
          {"alpha_hat", est.alpha_hat},
          {"best_trajectory", trajectory_json(best_trajectory(est.w_hat, *s->set))}};
}

std::vector<FeedbackRecord> FeedbackService::history(const std::string& session_id) const {
  auto s = find(session_id);
  std::lock_guard lock(s->mutex);
  return s->history;
}

std::vector<std::string> FeedbackService::session_ids() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, s] : sessions_) ids.push_back(id);
  return ids;
}

ReplayResult replay_session_log(const std::string& log_path, const SetRegistry& sets,
                                const SamplerConfig& sampler) {
  std::ifstream in(log_path);
  if (!in) fail(ErrorCode::io, "cannot open session log '" + log_path + "'");
  std::string line;
  std::size_t line_no = 0;
  std::optional<CreatedEvent> meta;
  std::shared_ptr<const TrajectorySet> set;
  ReplayResult result;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json e = json::parse(line);
      const auto kind = e.at("event").get<std::string>();
      if (kind == "created") {
        meta = parse_created(e);
        auto it = sets.find(meta->set_id);
        if (it == sets.end()) fail(ErrorCode::not_found, "unknown trajectory set '" + meta->set_id + "'");
        set = it->second;
        result.session_id = meta->session_id;
      } else if (!meta) {
        fail(ErrorCode::invalid_input, "event before the session was created");
      } else if (kind == "query") {
        result.pending = Query{set->index_of(e.at("p_id").get<std::string>()),
                               set->index_of(e.at("q_id").get<std::string>())};
      } else if (kind == "feedback") {
        result.history.push_back(record_from_json(
            {{"p_id", e.at("p_id")}, {"q_id", e.at("q_id")}, {"mu", e.at("mu")}, {"epsilon", e.at("epsilon")}},
            *set));
        result.pending.reset();
      } else {
        fail(ErrorCode::invalid_input, "unknown event '" + kind + "'");
      }
    } catch (const json::exception& ex) {
      fail(ErrorCode::invalid_input, log_path + ":" + std::to_string(line_no) + ": " + ex.what());
    }
  }
  if (!meta) fail(ErrorCode::invalid_input, "session log '" + log_path + "' has no created event");
  result.belief = rebuild_belief(set, result.history, meta->sigma, meta->M, meta->policy.seed, sampler);
  result.estimate = mean_weight(*result.belief);
  return result;
}

SetRegistry load_set_directory(const std::string& dir) {
  SetRegistry sets;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      sets.emplace(entry.path().stem().string(),
                   std::make_shared<const TrajectorySet>(load_trajset(entry.path().string())));
    }
  }
  if (ec) fail(ErrorCode::io, "cannot read set directory '" + dir + "': " + ec.message());
  return sets;
}

}  // namespace scalefb
