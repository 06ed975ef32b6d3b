#include "scalefb/errors.hpp"
#include "scalefb/random.hpp"
#include "scalefb/trajectory.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

using namespace scalefb;
using oracle::make_set;
using oracle::vec;

TEST_CASE("reward is the feature dot product") {
  auto set = make_set({{1, 0}, {0, 0}, {0.5, -0.5}});
  CHECK(reward((*set)[0], vec({1, 0})) == 1.0);
  CHECK(reward((*set)[1], vec({0.3, -2})) == 0.0);
  CHECK(reward((*set)[2], vec({0.6, 0.8})) == doctest::Approx(-0.1).epsilon(1e-15));
  CHECK_THROWS_AS(reward((*set)[0], vec({1, 0, 0})), Error);
}

TEST_CASE("trajectory set validation") {
  std::vector<Trajectory> one{{"a", vec({1, 0}), {}, {}}};
  CHECK_THROWS_AS(TrajectorySet(2, one), Error);
  std::vector<Trajectory> dup{{"a", vec({1, 0}), {}, {}}, {"a", vec({0, 1}), {}, {}}};
  CHECK_THROWS_AS(TrajectorySet(2, dup), Error);
  std::vector<Trajectory> bad_dim{{"a", vec({1, 0}), {}, {}}, {"b", vec({0, 1, 2}), {}, {}}};
  CHECK_THROWS_AS(TrajectorySet(2, bad_dim), Error);
  std::vector<Trajectory> nonfinite{{"a", vec({1, 0}), {}, {}}, {"b", vec({NAN, 1}), {}, {}}};
  CHECK_THROWS_AS(TrajectorySet(2, nonfinite), Error);
  auto set = make_set({{1, 0}, {0, 1}});
  CHECK(set->index_of("b") == 1);
  try {
    (void)set->index_of("zz");
    FAIL("expected not_found");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::not_found);
  }
}

TEST_CASE("best trajectory") {
  auto set = make_set({{1, 0}, {0, 1}});
  CHECK(best_trajectory(vec({1, 0}), *set).id == "a");

  // Tie on identical features goes to the lower id regardless of order.
  std::vector<Trajectory> tied{{"t2", vec({1, 0}), {}, {}}, {"t1", vec({1, 0}), {}, {}}};
  TrajectorySet tie_set(2, tied);
  CHECK(best_trajectory(vec({1, 0}), tie_set).id == "t1");

  auto three = make_set({{1, 0}, {0, 1}, {0.8, 0.8}});
  const auto& best = best_trajectory(vec({0.6, 0.8}), *three);
  CHECK(best.id == "c");
  CHECK(reward(best, vec({0.6, 0.8})) == doctest::Approx(1.12));
  CHECK(oracle::brute_best(*three, vec({0.6, 0.8})) == 2);
}

TEST_CASE("regret") {
  auto set = make_set({{1, 0}, {0, 1}});
  CHECK(regret(vec({1, 0}), vec({1, 0}), *set) == 0.0);
  CHECK(regret(vec({0, 1}), vec({1, 0}), *set) == doctest::Approx(1.0));
  // rho((1,0)) = (1,0); rho((0,1)) = (0,1) since 1 > 0.9; regret 1 - 0.
  auto three = make_set({{1, 0}, {0, 1}, {0.9, 0.9}});
  CHECK(oracle::brute_best(*three, vec({1, 0})) == 0);
  CHECK(oracle::brute_best(*three, vec({0, 1})) == 1);
  CHECK(regret(vec({1, 0}), vec({0, 1}), *three) == doctest::Approx(1.0));
  CHECK_THROWS_AS(regret(vec({1, 0, 0}), vec({0, 1}), *three), Error);
}

TEST_CASE("reward gap") {
  CHECK(reward_gap(vec({1, 0}), *make_set({{1, 0}, {-1, 0}})) == doctest::Approx(2.0));
  CHECK(reward_gap(vec({0.3, 0.7}), *make_set({{0.2, 0.4}, {0.2, 0.4}})) == 0.0);
  CHECK(reward_gap(vec({1, 1}) / std::sqrt(2.0), *make_set({{1, 0}, {0, 1}})) == doctest::Approx(0.0));
}

TEST_CASE("alignment") {
  const auto w = vec({0.3, -0.4, 0.5});
  CHECK(alignment(w, w) == doctest::Approx(1.0));
  CHECK(alignment(vec({2, 0}), vec({1, 0})) == doctest::Approx(1.0));
  CHECK(alignment(vec({1, 0}), vec({0, 1})) == doctest::Approx(0.0));
  CHECK_THROWS_AS(alignment(vec({0, 0}), vec({0, 1})), Error);
}

TEST_CASE("relative reward") {
  auto set = make_set({{1, 0}, {0, 1}});
  CHECK(relative_reward(vec({1, 0}), vec({1, 0}), *set) == 1.0);
  CHECK(relative_reward(vec({0, 1}), vec({1, 0}), *set) == doctest::Approx(0.0));
  CHECK(relative_reward(vec({0, 1}), vec({1, 0}), *make_set({{1, 0}, {0.9, 0.1}})) == doctest::Approx(0.9));
  try {
    (void)relative_reward(vec({0, 1}), vec({1, 0}), *make_set({{0, 1}, {0, -1}}));
    FAIL("expected degenerate_measure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::degenerate_measure);
  }
}

TEST_CASE("properties over random sets") {
  Rng rng(11);
  std::uniform_int_distribution<int> dim(2, 5), size(2, 20);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int trial = 0; trial < 300; ++trial) {
    const int d = dim(rng);
    const int n = size(rng);
    std::vector<Trajectory> items;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd f(d);
      for (int j = 0; j < d; ++j) f[j] = normal(rng);
      items.push_back({"t" + std::to_string(100 + i), f, {}, {}});
    }
    const TrajectorySet set(static_cast<std::size_t>(d), items);
    const Eigen::VectorXd w = random_unit_vector(d, rng);
    const Eigen::VectorXd w2 = random_unit_vector(d, rng);

    CHECK(regret(w, w2, set) >= 0.0);
    CHECK(regret(w2, w2, set) == 0.0);
    CHECK(best_index(set, w) == oracle::brute_best(set, w));
    CHECK(best_index(set, Eigen::VectorXd(scale(rng) * w)) == best_index(set, w));
    CHECK(reward_gap(w, set) == doctest::Approx(oracle::pairwise_gap(set, w)).epsilon(1e-12));
    CHECK(alignment(w, w2) == doctest::Approx(alignment(w2, w)));
    CHECK(alignment(scale(rng) * w, w2) == doctest::Approx(alignment(w, w2)));
    if (best_index(set, w) == best_index(set, w2) && set.rewards(w2).maxCoeff() != 0.0) {
      CHECK(relative_reward(w, w2, set) == 1.0);
    }
  }
}
