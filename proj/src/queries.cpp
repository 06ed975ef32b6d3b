#include "scalefb/queries.hpp"

#include "scalefb/errors.hpp"
#include "scalefb/user_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>
#include <vector>

namespace scalefb {

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::random: return "random";
    case PolicyKind::info_gain: return "info_gain";
    case PolicyKind::max_regret: return "max_regret";
  }
  return "unknown";
}

PolicyKind parse_policy_kind(std::string_view text) {
  if (text == "random") return PolicyKind::random;
  if (text == "info_gain") return PolicyKind::info_gain;
  if (text == "max_regret") return PolicyKind::max_regret;
  fail(ErrorCode::invalid_input, "unknown query policy '" + std::string(text) +
                                     "' (expected random, info_gain or max_regret)");
}

Query random_query(const TrajectorySet& set, Rng& rng) {
  const std::size_t n = set.size();
  if (n < 2) fail(ErrorCode::invalid_input, "random query needs at least 2 trajectories");
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  std::uniform_int_distribution<std::size_t> second(0, n - 2);
  const std::size_t p = first(rng);
  std::size_t q = second(rng);
  if (q >= p) ++q;
  return {p, q};
}

namespace {

/// Ordered pairs (a, b), a != b, over [0, n): all of them when n(n-1) <= budget,
/// otherwise budget distinct pairs drawn uniformly. Order is reproducible.
std::vector<std::pair<std::size_t, std::size_t>> candidate_pairs(std::size_t n, std::size_t budget,
                                                                   Rng& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (budget < 1) fail(ErrorCode::invalid_input, "candidate budget must be at least 1");
  const std::size_t total = n * (n - 1);
  if (total <= budget) {
    pairs.reserve(total);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        if (a != b) pairs.emplace_back(a, b);
    return pairs;
  }
  pairs.reserve(budget);
  std::unordered_set<std::size_t> seen;
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  std::uniform_int_distribution<std::size_t> second(0, n - 2);
  while (pairs.size() < budget) {
    const std::size_t a = first(rng);
    std::size_t b = second(rng);
    if (b >= a) ++b;
    if (seen.insert(a * n + b).second) pairs.emplace_back(a, b);
  }
  return pairs;
}

/// Scores queries against one belief, reusing buffers across candidates.
class InfoGainScorer {
 public:
  InfoGainScorer(const Belief& belief, double epsilon)
      : belief_(belief), grid_(epsilon), outcome_mass_(grid_.size()), z_(grid_.size()), tail_(grid_.size()) {}

  double operator()(Query query) {
    const auto& rewards = belief_.sample_rewards();
    const auto& gaps = belief_.gaps();
    const auto& weights = belief_.weights();
    const auto bounds = grid_.boundaries();
    const double sigma = belief_.sigma();
    const std::size_t k = grid_.size();
    std::fill(outcome_mass_.begin(), outcome_mass_.end(), 0.0);
    // Mutual information: sum_s w_s sum_mu p log2 p - sum_mu m_mu log2 m_mu.
    double self_term = 0.0;
    for (Eigen::Index s = 0; s < rewards.rows(); ++s) {
      const double diff = rewards(s, static_cast<Eigen::Index>(query.p)) -
                          rewards(s, static_cast<Eigen::Index>(query.q));
      const double psi = model_response(diff, belief_.alphas()[s], gaps[s]);
      // Smaller normal tail at each cell boundary, one erfc per boundary.
      for (std::size_t j = 0; j + 1 < k; ++j) {
        const double z = (bounds[j] - psi) / sigma;
        z_[j] = z;
        tail_[j] = 0.5 * std::erfc(std::abs(z) * 0.70710678118654752440);
      }
      const double ws = weights[s];
      for (std::size_t j = 0; j < k; ++j) {
        double p;
        if (j == 0) {
          p = z_[0] <= 0.0 ? tail_[0] : 1.0 - tail_[0];
        } else if (j + 1 == k) {
          p = z_[j - 1] >= 0.0 ? tail_[j - 1] : 1.0 - tail_[j - 1];
        } else if (z_[j - 1] >= 0.0) {
          p = tail_[j - 1] - tail_[j];
        } else if (z_[j] <= 0.0) {
          p = tail_[j] - tail_[j - 1];
        } else {
          p = 1.0 - tail_[j - 1] - tail_[j];
        }
        if (p > 0.0) {
          self_term += ws * p * std::log2(p);
          outcome_mass_[j] += ws * p;
        }
      }
    }
    double mixed_term = 0.0;
    for (double m : outcome_mass_)
      if (m > 0.0) mixed_term += m * std::log2(m);
    return self_term - mixed_term;
  }

 private:
  const Belief& belief_;
  SliderGrid grid_;
  std::vector<double> outcome_mass_;
  std::vector<double> z_;
  std::vector<double> tail_;
};

}  // namespace

double info_gain_score(Query query, const Belief& belief, double epsilon) {
  if (query.p >= belief.set().size() || query.q >= belief.set().size()) {
    fail(ErrorCode::invalid_input, "query refers to a trajectory outside the set");
  }
  InfoGainScorer scorer(belief, epsilon);
  return scorer(query);
}

Query select_info_gain(const Belief& belief, const QueryPolicy& policy, double epsilon, Rng& rng) {
  const std::size_t n = belief.set().size();
  if (n < 2) fail(ErrorCode::invalid_input, "query selection needs at least 2 trajectories");
  const auto pairs = candidate_pairs(n, policy.candidate_budget, rng);
  InfoGainScorer scorer(belief, epsilon);
  Query best{pairs.front().first, pairs.front().second};
  double best_score = -std::numeric_limits<double>::infinity();
  for (const auto& [p, q] : pairs) {
    const double s = scorer({p, q});
    if (s > best_score) {
      best_score = s;
      best = {p, q};
    }
  }
  return best;
}

RegretScore max_regret_score(const WeightVector& w_p, const WeightVector& w_q,
                             const TrajectorySet& set) {
  const Eigen::VectorXd rp = set.rewards(w_p);
  const Eigen::VectorXd rq = set.rewards(w_q);
  const std::size_t best_p = best_index_by_reward(set, rp);
  const std::size_t best_q = best_index_by_reward(set, rq);
  const auto ip = static_cast<Eigen::Index>(best_p);
  const auto iq = static_cast<Eigen::Index>(best_q);
  // R(w_p, w_q) + R(w_q, w_p)
  const double score = (rq[iq] - rq[ip]) + (rp[ip] - rp[iq]);
  return {score, {best_p, best_q}};
}

Query select_max_regret(const Belief& belief, const QueryPolicy& policy, Rng& rng) {
  const std::size_t m = belief.size();
  if (m < 2) fail(ErrorCode::invalid_input, "max regret selection needs at least 2 belief samples");
  const auto pairs = candidate_pairs(m, policy.candidate_budget, rng);
  const auto& rewards = belief.sample_rewards();
  const auto& optimal = belief.optimal();
  const auto& weights = belief.weights();

  double best_value = -std::numeric_limits<double>::infinity();
  Query best{optimal[pairs.front().first], optimal[pairs.front().second]};
  bool found = false;
  for (const auto& [a, b] : pairs) {
    const std::size_t ta = optimal[a];
    const std::size_t tb = optimal[b];
    if (ta == tb) continue;
    const auto ia = static_cast<Eigen::Index>(a);
    const auto ib = static_cast<Eigen::Index>(b);
    const double score = (rewards(ib, static_cast<Eigen::Index>(tb)) - rewards(ib, static_cast<Eigen::Index>(ta))) +
                         (rewards(ia, static_cast<Eigen::Index>(ta)) - rewards(ia, static_cast<Eigen::Index>(tb)));
    const double value = weights[ia] * weights[ib] * score;
    if (!found || value > best_value) {
      best_value = value;
      best = {ta, tb};
      found = true;
    }
  }
  return best;
}

Query select_query(const Belief& belief, const QueryPolicy& policy, double epsilon, Rng& rng) {
  switch (policy.kind) {
    case PolicyKind::random: return random_query(belief.set(), rng);
    case PolicyKind::info_gain: return select_info_gain(belief, policy, epsilon, rng);
    case PolicyKind::max_regret: return select_max_regret(belief, policy, rng);
  }
  fail(ErrorCode::invalid_input, "unknown query policy");
}

}  // namespace scalefb
