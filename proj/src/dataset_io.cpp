#include "scalefb/dataset_io.hpp"

#include "scalefb/errors.hpp"
#include "scalefb/user_model.hpp"

#include <fstream>
#include <map>

namespace scalefb {

using nlohmann::json;

json record_to_json(const FeedbackRecord& record, const TrajectorySet& set) {
  return {{"p_id", set[record.query.p].id},
          {"q_id", set[record.query.q].id},
          {"mu", record.mu},
          {"epsilon", record.epsilon}};
}

FeedbackRecord record_from_json(const json& obj, const TrajectorySet& set) {
  if (!obj.is_object()) fail(ErrorCode::invalid_input, "feedback record must be a JSON object");
  for (const char* key : {"p_id", "q_id"}) {
    if (!obj.contains(key) || !obj[key].is_string()) {
      fail(ErrorCode::invalid_input, std::string("feedback record needs a string \"") + key + "\"");
    }
  }
  for (const char* key : {"mu", "epsilon"}) {
    if (!obj.contains(key) || !obj[key].is_number()) {
      fail(ErrorCode::invalid_input, std::string("feedback record needs a numeric \"") + key + "\"");
    }
  }
  FeedbackRecord rec;
  rec.query = {set.index_of(obj["p_id"].get<std::string>()), set.index_of(obj["q_id"].get<std::string>())};
  rec.epsilon = obj["epsilon"].get<double>();
  rec.mu = SliderGrid(rec.epsilon).snap(obj["mu"].get<double>());
  return rec;
}

namespace {

template <typename Fn>
void for_each_line(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open dataset '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      fail(ErrorCode::invalid_input, path + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

}  // namespace

std::vector<FeedbackRecord> load_dataset(const std::string& path, const TrajectorySet& set) {
  std::vector<FeedbackRecord> out;
  for_each_line(path, [&](const json& obj) { out.push_back(record_from_json(obj, set)); });
  return out;
}

void save_dataset(const std::vector<FeedbackRecord>& records, const TrajectorySet& set,
                  const std::string& path) {
  save_grouped_dataset({records}, set, path);
}

std::vector<std::vector<FeedbackRecord>> load_grouped_dataset(const std::string& path,
                                                              const TrajectorySet& set) {
  std::vector<std::vector<FeedbackRecord>> groups;
  std::map<std::string, std::size_t> index;
  for_each_line(path, [&](const json& obj) {
    std::string user;
    if (obj.is_object() && obj.contains("user")) {
      user = obj["user"].is_string() ? obj["user"].get<std::string>() : obj["user"].dump();
    }
    auto [it, inserted] = index.emplace(user, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(record_from_json(obj, set));
  });
  return groups;
}

void save_grouped_dataset(const std::vector<std::vector<FeedbackRecord>>& groups,
                          const TrajectorySet& set, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write dataset '" + path + "'");
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (const auto& rec : groups[g]) {
      json obj = record_to_json(rec, set);
      if (groups.size() > 1) obj["user"] = "u" + std::to_string(g);
      out << obj.dump() << '\n';
    }
  }
  if (!out) fail(ErrorCode::io, "failed writing dataset '" + path + "'");
}

json belief_to_json(const Belief& belief) {
  json samples = json::array();
  for (Eigen::Index i = 0; i < belief.samples().rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < belief.samples().cols(); ++j) row.push_back(belief.samples()(i, j));
    row.push_back(belief.alphas()[i]);
    samples.push_back(std::move(row));
  }
  const auto& w = belief.weights();
  return {{"samples", std::move(samples)},
          {"weights", std::vector<double>(w.data(), w.data() + w.size())},
          {"sigma", belief.sigma()}};
}

Belief belief_from_json(const json& obj, std::shared_ptr<const TrajectorySet> set,
                        std::vector<FeedbackRecord> dataset) {
  if (!set) fail(ErrorCode::invalid_input, "belief needs a trajectory set");
  try {
    const auto& rows = obj.at("samples");
    const auto& weights = obj.at("weights");
    const auto d = static_cast<Eigen::Index>(set->dimension());
    const auto m = static_cast<Eigen::Index>(rows.size());
    if (weights.size() != rows.size()) {
      fail(ErrorCode::invalid_input, "belief snapshot: samples and weights differ in length");
    }
    Eigen::MatrixXd samples(m, d);
    Eigen::VectorXd alphas(m), w(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const auto& row = rows[static_cast<std::size_t>(i)];
      if (row.size() != static_cast<std::size_t>(d + 1)) {
        fail(ErrorCode::invalid_input, "belief snapshot: sample row has wrong length");
      }
      for (Eigen::Index j = 0; j < d; ++j) samples(i, j) = row[static_cast<std::size_t>(j)].get<double>();
      alphas[i] = row[static_cast<std::size_t>(d)].get<double>();
      w[i] = weights[static_cast<std::size_t>(i)].get<double>();
    }
    return Belief(std::move(set), std::move(samples), std::move(alphas), std::move(w),
                  std::move(dataset), obj.at("sigma").get<double>());
  } catch (const json::exception& e) {
    fail(ErrorCode::invalid_input, std::string("belief snapshot: ") + e.what());
  }
}

}  // namespace scalefb
