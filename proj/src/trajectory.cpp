#include "scalefb/trajectory.hpp"

#include "scalefb/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace scalefb {

namespace {

void check_dimension(const TrajectorySet& set, const WeightVector& w) {
  if (static_cast<std::size_t>(w.size()) != set.dimension()) {
    fail(ErrorCode::invalid_input, "weight dimension " + std::to_string(w.size()) +
                                       " does not match trajectory dimension " +
                                       std::to_string(set.dimension()));
  }
}

}  // namespace

TrajectorySet::TrajectorySet(std::size_t dimension, std::vector<Trajectory> items, std::string note)
    : dimension_(dimension), items_(std::move(items)), note_(std::move(note)) {
  if (dimension_ == 0) fail(ErrorCode::invalid_input, "trajectory dimension must be positive");
  if (items_.size() < 2) {
    fail(ErrorCode::invalid_input, "a trajectory set needs at least 2 items, got " +
                                       std::to_string(items_.size()));
  }
  features_.resize(static_cast<Eigen::Index>(items_.size()), static_cast<Eigen::Index>(dimension_));
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const auto& t = items_[i];
    if (static_cast<std::size_t>(t.features.size()) != dimension_) {
      fail(ErrorCode::invalid_input, "trajectory '" + t.id + "' has " +
                                         std::to_string(t.features.size()) + " features, expected " +
                                         std::to_string(dimension_));
    }
    if (!t.features.allFinite()) {
      fail(ErrorCode::invalid_input, "trajectory '" + t.id + "' has non-finite features");
    }
    if (!index_.emplace(t.id, i).second) {
      fail(ErrorCode::invalid_input, "duplicate trajectory id '" + t.id + "'");
    }
    features_.row(static_cast<Eigen::Index>(i)) = t.features.transpose();
  }
  std::vector<std::size_t> order(items_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return items_[a].id < items_[b].id; });
  id_rank_.resize(items_.size());
  for (std::size_t r = 0; r < order.size(); ++r) id_rank_[order[r]] = r;
}

std::optional<std::size_t> TrajectorySet::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t TrajectorySet::index_of(std::string_view id) const {
  auto idx = find(id);
  if (!idx) fail(ErrorCode::not_found, "unknown trajectory id '" + std::string(id) + "'");
  return *idx;
}

Eigen::VectorXd TrajectorySet::rewards(const WeightVector& w) const {
  check_dimension(*this, w);
  return features_ * w;
}

double reward(const Trajectory& traj, const WeightVector& w) {
  if (traj.features.size() != w.size()) {
    fail(ErrorCode::invalid_input, "weight dimension " + std::to_string(w.size()) +
                                       " does not match feature dimension " +
                                       std::to_string(traj.features.size()));
  }
  return traj.features.dot(w);
}

std::size_t best_index_by_reward(const TrajectorySet& set, const Eigen::Ref<const Eigen::VectorXd>& rewards) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < set.size(); ++i) {
    const double r = rewards[static_cast<Eigen::Index>(i)];
    const double b = rewards[static_cast<Eigen::Index>(best)];
    if (r > b || (r == b && set.id_rank(i) < set.id_rank(best))) best = i;
  }
  return best;
}

std::size_t best_index(const TrajectorySet& set, const WeightVector& w) {
  return best_index_by_reward(set, set.rewards(w));
}

const Trajectory& best_trajectory(const WeightVector& w, const TrajectorySet& set) {
  return set[best_index(set, w)];
}

double regret(const WeightVector& w, const WeightVector& w_true, const TrajectorySet& set) {
  check_dimension(set, w);
  const Eigen::VectorXd true_rewards = set.rewards(w_true);
  const std::size_t planned = best_index(set, w);
  return true_rewards.maxCoeff() - true_rewards[static_cast<Eigen::Index>(planned)];
}

double reward_gap(const WeightVector& w, const TrajectorySet& set) {
  const Eigen::VectorXd r = set.rewards(w);
  return r.maxCoeff() - r.minCoeff();
}

double alignment(const WeightVector& w_hat, const WeightVector& w_true) {
  if (w_hat.size() != w_true.size()) {
    fail(ErrorCode::invalid_input, "alignment of vectors with different dimensions");
  }
  const double nh = w_hat.norm();
  const double nt = w_true.norm();
  if (nh == 0.0 || nt == 0.0) fail(ErrorCode::invalid_input, "alignment of a zero vector");
  return std::clamp(w_hat.dot(w_true) / (nh * nt), -1.0, 1.0);
}

double relative_reward(const WeightVector& w_hat, const WeightVector& w_true,
                       const TrajectorySet& set) {
  check_dimension(set, w_hat);
  const Eigen::VectorXd true_rewards = set.rewards(w_true);
  const double optimum = true_rewards.maxCoeff();
  if (optimum == 0.0) {
    fail(ErrorCode::degenerate_measure, "relative reward undefined: optimal reward is zero");
  }
  return true_rewards[static_cast<Eigen::Index>(best_index(set, w_hat))] / optimum;
}

}  // namespace scalefb
