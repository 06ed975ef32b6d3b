#include "scalefb/environments.hpp"
#include "scalefb/errors.hpp"
#include "scalefb/queries.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

using namespace scalefb;
using oracle::make_set;
using oracle::vec;

namespace {

Belief uniform_belief(std::shared_ptr<const TrajectorySet> set, const Eigen::MatrixXd& samples,
                      const Eigen::VectorXd& alphas, double sigma) {
  const auto m = samples.rows();
  return Belief(std::move(set), samples, alphas, Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m)), {},
                sigma);
}

}  // namespace

TEST_CASE("policy kind names round trip") {
  for (auto k : {PolicyKind::random, PolicyKind::info_gain, PolicyKind::max_regret})
    CHECK(parse_policy_kind(to_string(k)) == k);
  CHECK_THROWS_AS(parse_policy_kind("greedy"), Error);
}

TEST_CASE("random query is a uniform ordered pair of distinct trajectories") {
  auto set = make_set({{1, 0}, {0, 1}, {-1, 0}, {0, -1}});
  Rng rng(1);
  std::map<std::pair<std::size_t, std::size_t>, int> counts;
  constexpr int kDraws = 120000;
  int first_lower = 0;
  for (int i = 0; i < kDraws; ++i) {
    const Query q = random_query(*set, rng);
    REQUIRE(q.p != q.q);
    ++counts[{q.p, q.q}];
    if (q.p < q.q) ++first_lower;
  }
  CHECK(counts.size() == 12);
  for (const auto& [pair, c] : counts) CHECK(std::abs(c / double(kDraws) - 1.0 / 12) < 0.005);
  CHECK(std::abs(first_lower / double(kDraws) - 0.5) < 0.02);
}

TEST_CASE("information gain of a perfectly split two-sample belief is one bit") {
  auto set = make_set({{1, 0}, {-1, 0}});
  Eigen::MatrixXd s(2, 2);
  s << 1, 0, -1, 0;
  const Belief b = uniform_belief(set, s, vec({1, 1}), 0.1);
  // 1 - H2(Phi(-15)) with the 3-point grid, scipy reference.
  CHECK(info_gain_score({0, 1}, b, 1.0) == doctest::Approx(0.9999997133).epsilon(1e-8));
  CHECK(info_gain_score({0, 1}, b, 1.0) == doctest::Approx(oracle::info_gain(b, {0, 1}, 1.0)).epsilon(1e-10));
}

TEST_CASE("information gain is zero when every sample agrees") {
  auto set = make_set({{1, 0}, {-1, 0}, {0, 1}});
  Eigen::MatrixXd s(3, 2);
  s << 1, 0, 1, 0, 1, 0;
  const Belief b = uniform_belief(set, s, vec({0.5, 0.5, 0.5}), 0.2);
  for (std::size_t p = 0; p < 3; ++p)
    for (std::size_t q = 0; q < 3; ++q)
      if (p != q) CHECK(std::abs(info_gain_score({p, q}, b, 0.1)) < 1e-12);
}

TEST_CASE("information gain matches the direct sum and respects its bounds") {
  Rng env_rng(9);
  auto set = std::make_shared<const TrajectorySet>(synthetic_env(3, 12, env_rng));
  Rng rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    const Belief b = prior_belief(set, trial % 2 ? 0.05 : 0.4, 40, rng);
    for (double eps : {0.1, 0.25, 1.0}) {
      const double bound = std::min(std::log2(40.0), std::log2(static_cast<double>(SliderGrid(eps).size())));
      for (int k = 0; k < 5; ++k) {
        const Query q = random_query(*set, rng);
        const double ig = info_gain_score(q, b, eps);
        CHECK(ig >= -1e-12);
        CHECK(ig <= bound + 1e-12);
        CHECK(ig == doctest::Approx(oracle::info_gain(b, q, eps)).epsilon(1e-9));
        // Reversing the pair mirrors psi and the grid, leaving the gain unchanged.
        CHECK(info_gain_score({q.q, q.p}, b, eps) == doctest::Approx(ig).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("information gain selection with an exhaustive candidate set returns the argmax") {
  auto set = make_set({{1, 0}, {-1, 0.2}, {0.1, 1}});
  Rng rng(3);
  const Belief b = prior_belief(set, 0.2, 30, rng);
  double best = -1;
  for (std::size_t p = 0; p < 3; ++p)
    for (std::size_t q = 0; q < 3; ++q)
      if (p != q) best = std::max(best, oracle::info_gain(b, {p, q}, 0.1));
  const Query chosen = select_info_gain(b, {PolicyKind::info_gain, 2000, 0}, 0.1, rng);
  CHECK(chosen.p != chosen.q);
  CHECK(oracle::info_gain(b, chosen, 0.1) == doctest::Approx(best).epsilon(1e-9));
}

TEST_CASE("max regret score") {
  auto set = make_set({{1, 0}, {0, 1}, {0.5, 0.5}});
  RegretScore r = max_regret_score(vec({1, 0}), vec({0, 1}), *set);
  CHECK(r.score == doctest::Approx(2.0));
  CHECK(r.query.p == 0);
  CHECK(r.query.q == 1);

  r = max_regret_score(vec({1, 0}), vec({1, 0}), *set);
  CHECK(r.score == 0.0);
  CHECK(r.query.p == r.query.q);

  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const auto a = random_unit_vector(2, rng), b = random_unit_vector(2, rng);
    const auto ab = max_regret_score(a, b, *set), ba = max_regret_score(b, a, *set);
    CHECK(ab.score >= 0.0);
    CHECK(ab.score == doctest::Approx(ba.score));
    CHECK(ab.query.p == oracle::brute_best(*set, a));
    CHECK(ab.query.q == oracle::brute_best(*set, b));
  }
}

TEST_CASE("max regret selection") {
  auto set = make_set({{1, 0}, {0, 1}, {-1, 0}});
  Eigen::MatrixXd s(3, 2);
  s << 1, 0, 0.99, 0.141067, -1, 0;
  s.row(1).normalize();
  const Belief b = uniform_belief(set, s, vec({0.5, 0.5, 0.5}), 0.1);
  Rng rng(8);
  const Query q = select_max_regret(b, {PolicyKind::max_regret, 2000, 0}, rng);
  CHECK(std::set<std::size_t>{q.p, q.q} == std::set<std::size_t>{0, 2});

  // Samples that all agree still produce a query, even though it is not informative.
  Eigen::MatrixXd same(2, 2);
  same << 1, 0, 1, 0;
  const Belief agree = uniform_belief(set, same, vec({0.5, 0.5}), 0.1);
  const Query fallback = select_max_regret(agree, {PolicyKind::max_regret, 2000, 0}, rng);
  CHECK(fallback.p < 3);
  CHECK(fallback.q < 3);

  Eigen::MatrixXd one(1, 2);
  one << 1, 0;
  CHECK_THROWS_AS(select_max_regret(uniform_belief(set, one, vec({0.5}), 0.1), {PolicyKind::max_regret, 2000, 0}, rng),
                  Error);
}

TEST_CASE("selection is deterministic for a fixed stream") {
  Rng env_rng(4);
  auto set = std::make_shared<const TrajectorySet>(synthetic_env(5, 80, env_rng));
  Rng init(2);
  const Belief b = prior_belief(set, 0.1, 60, init);
  for (auto kind : {PolicyKind::random, PolicyKind::info_gain, PolicyKind::max_regret}) {
    Rng r1(99), r2(99);
    const QueryPolicy policy{kind, 300, 0};
    const Query a = select_query(b, policy, 0.1, r1);
    const Query c = select_query(b, policy, 0.1, r2);
    CHECK(a.p == c.p);
    CHECK(a.q == c.q);
    CHECK(a.p != a.q);
  }
}
