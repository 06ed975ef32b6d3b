#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace scalefb {

/// Weight vector of the linear reward. Posterior samples and simulated users
/// are kept on the unit sphere; metric functions accept any norm.
using WeightVector = Eigen::VectorXd;

struct Trajectory {
  std::string id;
  Eigen::VectorXd features;
  std::optional<std::string> label;
  std::optional<std::string> media_ref;
};

/// Immutable, validated collection of trajectories sharing one feature
/// dimension. Rows of features() follow item order.
class TrajectorySet {
 public:
  TrajectorySet(std::size_t dimension, std::vector<Trajectory> items, std::string note = {});

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return items_.size(); }
  const std::vector<Trajectory>& items() const noexcept { return items_; }
  const Trajectory& operator[](std::size_t i) const { return items_[i]; }

  /// Free-form provenance text stored in the file header (generator rules).
  const std::string& note() const noexcept { return note_; }

  std::optional<std::size_t> find(std::string_view id) const;
  /// Throws not_found for unknown ids.
  std::size_t index_of(std::string_view id) const;

  /// n x d matrix, one row per trajectory.
  const Eigen::MatrixXd& features() const noexcept { return features_; }

  /// Rewards of every trajectory under w.
  Eigen::VectorXd rewards(const WeightVector& w) const;

  /// Position of each item when ids are sorted; used for the lowest-id tie-break.
  std::size_t id_rank(std::size_t i) const { return id_rank_[i]; }

 private:
  std::size_t dimension_;
  std::vector<Trajectory> items_;
  std::string note_;
  Eigen::MatrixXd features_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::size_t> id_rank_;
};

/// Ordered pair of trajectory indices into a TrajectorySet.
struct Query {
  std::size_t p = 0;
  std::size_t q = 0;
  friend bool operator==(const Query&, const Query&) = default;
};

double reward(const Trajectory& traj, const WeightVector& w);

/// Index of the reward-maximizing trajectory; exact ties go to the lowest id.
std::size_t best_index(const TrajectorySet& set, const WeightVector& w);
/// Same selection over precomputed rewards (one per item).
std::size_t best_index_by_reward(const TrajectorySet& set, const Eigen::Ref<const Eigen::VectorXd>& rewards);

const Trajectory& best_trajectory(const WeightVector& w, const TrajectorySet& set);

/// R(w, w_true): loss under w_true of planning with w instead of w_true.
double regret(const WeightVector& w, const WeightVector& w_true, const TrajectorySet& set);

/// Maximum reward gap: max over ordered pairs of (phi_P - phi_Q).w, i.e. max - min reward.
double reward_gap(const WeightVector& w, const TrajectorySet& set);

/// Cosine similarity.
double alignment(const WeightVector& w_hat, const WeightVector& w_true);

/// Reward of rho(w_hat) under w_true relative to the optimum under w_true.
/// Throws degenerate_measure when the optimum's reward is zero.
double relative_reward(const WeightVector& w_hat, const WeightVector& w_true,
                       const TrajectorySet& set);

}  // namespace scalefb
