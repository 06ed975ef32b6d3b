#include "scalefb/errors.hpp"
#include "scalefb/user_model.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace scalefb;
using oracle::make_set;
using oracle::vec;

TEST_CASE("slider grid construction") {
  CHECK(SliderGrid(0.1).size() == 21);
  CHECK(SliderGrid(1.0).size() == 3);
  CHECK(SliderGrid(0.5).size() == 5);
  const SliderGrid odd(0.3);  // {-1, -0.9, ..., 0.9, 1}
  CHECK(odd.size() == 9);
  CHECK(odd.points().front() == -1.0);
  CHECK(odd.points().back() == 1.0);
  CHECK(SliderGrid(0.1).points().back() == 1.0);
  CHECK(SliderGrid(0.1).points()[SliderGrid(0.1).zero_index()] == 0.0);
  CHECK_THROWS_AS(SliderGrid(0.0), Error);
  CHECK_THROWS_AS(SliderGrid(1.5), Error);
}

TEST_CASE("round to grid") {
  CHECK(round_to_grid(0.44, 0.1) == doctest::Approx(0.4));
  CHECK(round_to_grid(1.3, 0.1) == 1.0);
  CHECK(round_to_grid(-7.0, 0.1) == -1.0);
  CHECK(round_to_grid(0.2, 1.0) == 0.0);
  CHECK(round_to_grid(0.5, 1.0) == 1.0);    // tie away from zero
  CHECK(round_to_grid(-0.5, 1.0) == -1.0);
  CHECK(round_to_grid(0.25, 0.5) == 0.5);
  CHECK(round_to_grid(-0.25, 0.5) == -0.5);
  CHECK(round_to_grid(0.96, 0.3) == 1.0);   // nearer to the appended end point
  CHECK(round_to_grid(0.94, 0.3) == doctest::Approx(0.9));
}

TEST_CASE("round to grid stays on the grid within half a step") {
  Rng rng(3);
  std::uniform_real_distribution<double> x(-1.0, 1.0), eps(0.01, 1.0);
  for (int i = 0; i < 5000; ++i) {
    const double e = i % 2 ? 0.1 : eps(rng);
    const double v = x(rng);
    const SliderGrid grid(e);
    const double r = grid.round(v);
    CHECK(grid.index_of(r).has_value());
    CHECK(std::abs(r) <= 1.0);
    // Interior cells have half-width e/2; the end cells on non-integral grids are narrower.
    CHECK(std::abs(r - v) <= e / 2 + 1e-12);
  }
}

TEST_CASE("off-grid values are rejected by snap") {
  const SliderGrid grid(0.1);
  CHECK(grid.snap(0.4) == doctest::Approx(0.4));
  CHECK_THROWS_AS(grid.snap(0.35), Error);
}

TEST_CASE("noiseless response") {
  auto set = make_set({{1, 0}, {-1, 0}, {0, 1}, {1, 0}});
  SimulatedUser user{vec({1, 0}), 1.0, 0.0, 0.1};
  CHECK(noiseless_response(user, {0, 3}, *set) == 0.0);
  CHECK(noiseless_response(user, {0, 2}, *set) == doctest::Approx(0.5));
  user.alpha_star = 0.5;
  CHECK(noiseless_response(user, {0, 2}, *set) == 1.0);
  CHECK(noiseless_response(user, {2, 0}, *set) == -1.0);

  auto flat = make_set({{0, 1}, {0, 2}});
  try {
    (void)noiseless_response(user, {0, 1}, *flat);
    FAIL("expected degenerate_environment");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::degenerate_environment);
  }
}

TEST_CASE("noiseless response properties") {
  Rng rng(5);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  std::vector<Trajectory> items;
  for (int i = 0; i < 15; ++i) items.push_back({"t" + std::to_string(10 + i), Eigen::VectorXd::NullaryExpr(4, [&] { return normal(rng); }), {}, {}});
  const TrajectorySet set(4, items);
  for (int trial = 0; trial < 500; ++trial) {
    SimulatedUser user = random_user(4, unit(rng), 0.0, 0.1, rng);
    const Query q{static_cast<std::size_t>(trial % 15), static_cast<std::size_t>((trial * 7 + 3) % 15)};
    const double psi = noiseless_response(user, q, set);
    CHECK(noiseless_response(user, {q.q, q.p}, set) == doctest::Approx(-psi));
    SimulatedUser scaled = user;
    scaled.w_star *= 3.7;
    CHECK(noiseless_response(scaled, q, set) == doctest::Approx(psi));
    SimulatedUser larger = user;
    larger.alpha_star = std::min(1.0, user.alpha_star + 0.2);
    CHECK(std::abs(noiseless_response(larger, q, set)) <= std::abs(psi) + 1e-12);
  }
}

TEST_CASE("noisy response") {
  auto set = make_set({{1, 0}, {-1, 0}, {0, 1}});
  SimulatedUser exact{vec({1, 0}), 1.0, 0.0, 0.1};
  Rng rng(1);
  CHECK(noisy_response(exact, {0, 2}, *set, rng) == doctest::Approx(round_to_grid(0.5, 0.1)));

  SimulatedUser soft{vec({1, 0}), 0.7, 0.4, 1.0};
  for (int i = 0; i < 1000; ++i) {
    const double mu = noisy_response(soft, {i % 3 == 0 ? 0u : 2u, 1}, *set, rng);
    CHECK((mu == -1.0 || mu == 0.0 || mu == 1.0));
  }

  // psi = 1 for (P, Q) = ((1,0), (-1,0)); mean of mu lies just below 1.
  SimulatedUser noisy{vec({1, 0}), 1.0, 0.1, 0.1};
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) sum += noisy_response(noisy, {0, 1}, *set, rng);
  const double mean = sum / 100000.0;
  CHECK(mean >= 0.95);
  CHECK(mean <= 1.0);

  Rng a(42), b(42);
  for (int i = 0; i < 50; ++i) CHECK(noisy_response(noisy, {0, 2}, *set, a) == noisy_response(noisy, {0, 2}, *set, b));
}

TEST_CASE("soft choice response matches the epsilon = 1 slider draw for draw") {
  auto set = make_set({{1, 0}, {-1, 0}, {0, 1}, {0.3, 0.2}});
  SimulatedUser user{vec({0.6, 0.8}), 0.6, 0.3, 1.0};
  Rng a(9), b(9);
  for (int i = 0; i < 2000; ++i) {
    const Query q{static_cast<std::size_t>(i % 4), static_cast<std::size_t>((i / 4) % 4)};
    CHECK(static_cast<double>(soft_choice_response(user, q, *set, a)) == noisy_response(user, q, *set, b));
  }
}
