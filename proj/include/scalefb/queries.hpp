#pragma once

#include "scalefb/belief.hpp"
#include "scalefb/random.hpp"
#include "scalefb/trajectory.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace scalefb {

enum class PolicyKind { random, info_gain, max_regret };

std::string_view to_string(PolicyKind kind);
PolicyKind parse_policy_kind(std::string_view text);

struct QueryPolicy {
  PolicyKind kind = PolicyKind::info_gain;
  std::size_t candidate_budget = 2000;  // pairs scored per round
  std::uint64_t seed = 0;
};

/// Uniform ordered pair of distinct trajectories.
Query random_query(const TrajectorySet& set, Rng& rng);

/// Expected information gain in bits of asking query, with the expectation over
/// the epsilon grid and the entropy estimated on the belief's samples.
double info_gain_score(Query query, const Belief& belief, double epsilon);

/// Best query among candidate_budget distinct ordered pairs (all pairs when they fit).
Query select_info_gain(const Belief& belief, const QueryPolicy& policy, double epsilon, Rng& rng);

struct RegretScore {
  double score = 0.0;
  Query query;
};

/// R(w_p, w_q) + R(w_q, w_p) together with the query (rho(w_p), rho(w_q)).
/// The saturation parameters of both users do not enter the regret.
RegretScore max_regret_score(const WeightVector& w_p, const WeightVector& w_q, const TrajectorySet& set);

/// Query of the sample pair maximizing weight_p * weight_q * regret score among
/// candidate_budget pairs; pairs sharing an optimal trajectory are skipped
/// unless no other pair exists. Needs at least two samples.
Query select_max_regret(const Belief& belief, const QueryPolicy& policy, Rng& rng);

/// Dispatches on policy.kind.
Query select_query(const Belief& belief, const QueryPolicy& policy, double epsilon, Rng& rng);

}  // namespace scalefb
