#include "scalefb/environments.hpp"

#include "scalefb/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <vector>

namespace scalefb {

using nlohmann::json;

namespace {

std::string padded_id(const char* prefix, std::size_t i, std::size_t n) {
  const std::size_t width = std::to_string(n > 0 ? n - 1 : 0).size();
  std::string digits = std::to_string(i);
  return prefix + std::string(width - std::min(width, digits.size()), '0') + digits;
}

constexpr double kLevels[4] = {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};
constexpr const char* kDrinks[3] = {"orange juice", "water", "milk"};
constexpr const char* kLevelNames[4] = {"none", "low", "medium", "high"};

struct FetchCombo {
  int speed, height, drink, orientation, over, hit;
};

std::vector<FetchCombo> fetch_lattice() {
  std::vector<FetchCombo> out;
  for (int speed = 0; speed < 4; ++speed)
    for (int height = 0; height < 4; ++height)
      for (int drink = 0; drink < 3; ++drink)
        for (int orientation = 0; orientation < 2; ++orientation)
          for (int over = 0; over < 2; ++over)
            for (int hit = 0; hit <= over; ++hit)
              out.push_back({speed, height, drink, orientation, over, hit});
  return out;
}

}  // namespace

EnvironmentKind parse_environment_kind(const std::string& text) {
  if (text == "synthetic") return EnvironmentKind::synthetic;
  if (text == "fetch") return EnvironmentKind::fetch;
  if (text == "file") return EnvironmentKind::file;
  fail(ErrorCode::invalid_input, "unknown environment kind '" + text + "'");
}

TrajectorySet synthetic_env(std::size_t dimension, std::size_t n, Rng& rng) {
  if (dimension < 2) fail(ErrorCode::invalid_input, "synthetic environment needs dimension >= 2");
  if (n < 2) fail(ErrorCode::invalid_input, "synthetic environment needs at least 2 trajectories");
  const auto d = static_cast<Eigen::Index>(dimension);
  std::normal_distribution<double> jitter(0.0, 0.1);
  std::set<std::vector<double>> seen;
  std::vector<Trajectory> items;
  items.reserve(n);
  while (items.size() < n) {
    Eigen::VectorXd phi = random_unit_vector(d, rng);
    for (Eigen::Index i = 0; i < d; ++i) phi[i] += jitter(rng);
    const double norm = phi.norm();
    if (norm > 1.0) phi /= norm;
    if (!seen.insert(std::vector<double>(phi.data(), phi.data() + d)).second) continue;
    items.push_back({padded_id("t", items.size(), n), std::move(phi), std::nullopt, std::nullopt});
  }
  return TrajectorySet(dimension, std::move(items),
                       "synthetic: unit direction + N(0, 0.1^2) jitter, scaled into the unit ball");
}

std::size_t fetch_combination_count() { return fetch_lattice().size(); }

TrajectorySet fetch_env(std::size_t n, Rng& rng) {
  auto lattice = fetch_lattice();
  if (n < 2 || n > lattice.size()) {
    fail(ErrorCode::invalid_input, "fetch environment supports 2.." + std::to_string(lattice.size()) +
                                       " trajectories, requested " + std::to_string(n));
  }
  // Partial Fisher-Yates: first n entries are a uniform draw without replacement.
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, lattice.size() - 1);
    std::swap(lattice[i], lattice[pick(rng)]);
  }
  std::vector<Trajectory> items;
  items.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = lattice[i];
    Eigen::VectorXd phi(8);
    phi << kLevels[c.speed], kLevels[c.height], c.drink == 0 ? 1.0 : 0.0, c.drink == 1 ? 1.0 : 0.0,
        c.drink == 2 ? 1.0 : 0.0, static_cast<double>(c.orientation), static_cast<double>(c.over),
        static_cast<double>(c.hit);
    std::string label = std::string(kDrinks[c.drink]) + ", speed " + kLevelNames[c.speed] +
                        ", height " + kLevelNames[c.height] + ", pan " +
                        (c.orientation ? "rotated" : "straight") + ", " +
                        (c.over ? "over pan" : "behind pan") + (c.hit ? ", hits pan" : "");
    items.push_back({padded_id("f", i, n), std::move(phi), std::move(label), std::nullopt});
  }
  return TrajectorySet(8, std::move(items),
                       "fetch: features [speed, height, orange_juice, water, milk, pan_orientation, "
                       "over_pan, hit_pan]; hit_pan = 1 only when over_pan = 1");
}

std::shared_ptr<const TrajectorySet> make_environment(const EnvironmentSpec& spec) {
  Rng rng(spec.seed);
  switch (spec.kind) {
    case EnvironmentKind::synthetic:
      return std::make_shared<const TrajectorySet>(synthetic_env(spec.dimension, spec.n_trajectories, rng));
    case EnvironmentKind::fetch:
      return std::make_shared<const TrajectorySet>(fetch_env(spec.n_trajectories, rng));
    case EnvironmentKind::file:
      if (!spec.path) fail(ErrorCode::invalid_input, "file environment needs a path");
      return std::make_shared<const TrajectorySet>(load_trajset(*spec.path));
  }
  fail(ErrorCode::invalid_input, "unknown environment kind");
}

TrajectorySet load_trajset(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open trajectory set '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> dimension;
  std::string note;
  std::vector<Trajectory> items;
  std::set<std::string> ids;
  auto where = [&] { return path + ":" + std::to_string(line_no) + ": "; };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(ErrorCode::invalid_input, where() + "parse error: " + e.what());
    }
    if (!obj.is_object()) fail(ErrorCode::invalid_input, where() + "expected a JSON object");
    if (!dimension) {
      if (!obj.contains("dimension") || !obj["dimension"].is_number_unsigned()) {
        fail(ErrorCode::invalid_input, where() + "header line must hold a positive \"dimension\"");
      }
      dimension = obj["dimension"].get<std::size_t>();
      if (*dimension == 0) fail(ErrorCode::invalid_input, where() + "dimension must be positive");
      if (obj.contains("note") && obj["note"].is_string()) note = obj["note"].get<std::string>();
      continue;
    }
    if (!obj.contains("id") || !obj["id"].is_string()) {
      fail(ErrorCode::invalid_input, where() + "item needs a string \"id\"");
    }
    if (!obj.contains("features") || !obj["features"].is_array()) {
      fail(ErrorCode::invalid_input, where() + "item needs a \"features\" array");
    }
    const auto& feats = obj["features"];
    if (feats.size() != *dimension) {
      fail(ErrorCode::invalid_input, where() + "item has " + std::to_string(feats.size()) +
                                         " features, header declares " + std::to_string(*dimension));
    }
    Trajectory t;
    t.id = obj["id"].get<std::string>();
    t.features.resize(static_cast<Eigen::Index>(*dimension));
    for (std::size_t i = 0; i < feats.size(); ++i) {
      if (!feats[i].is_number()) fail(ErrorCode::invalid_input, where() + "non-numeric feature");
      t.features[static_cast<Eigen::Index>(i)] = feats[i].get<double>();
    }
    if (obj.contains("label") && obj["label"].is_string()) t.label = obj["label"].get<std::string>();
    if (obj.contains("media_ref") && obj["media_ref"].is_string()) {
      t.media_ref = obj["media_ref"].get<std::string>();
    }
    if (!ids.insert(t.id).second) {
      fail(ErrorCode::invalid_input, where() + "duplicate id '" + t.id + "'");
    }
    items.push_back(std::move(t));
  }
  if (!dimension) fail(ErrorCode::invalid_input, path + ": missing header line");
  if (items.size() < 2) {
    fail(ErrorCode::invalid_input, path + ": a trajectory set needs at least 2 items, found " +
                                       std::to_string(items.size()));
  }
  return TrajectorySet(*dimension, std::move(items), std::move(note));
}

void save_trajset(const TrajectorySet& set, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write trajectory set '" + path + "'");
  json header = {{"dimension", set.dimension()}};
  if (!set.note().empty()) header["note"] = set.note();
  out << header.dump() << '\n';
  for (const auto& t : set.items()) {
    json obj;
    obj["id"] = t.id;
    obj["features"] = std::vector<double>(t.features.data(), t.features.data() + t.features.size());
    obj["label"] = t.label ? json(*t.label) : json(nullptr);
    obj["media_ref"] = t.media_ref ? json(*t.media_ref) : json(nullptr);
    out << obj.dump() << '\n';
  }
  if (!out) fail(ErrorCode::io, "failed writing trajectory set '" + path + "'");
}

}  // namespace scalefb
