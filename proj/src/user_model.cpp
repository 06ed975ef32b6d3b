#include "scalefb/user_model.hpp"

#include "scalefb/errors.hpp"

#include <algorithm>
#include <cmath>

namespace scalefb {

SliderGrid::SliderGrid(double epsilon) : epsilon_(epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    fail(ErrorCode::invalid_input, "slider step must lie in (0, 1], got " + std::to_string(epsilon));
  }
  // For integral 1/eps, n / (1/eps) is the double nearest n*eps (0.3 rather than 3 * 0.1).
  const double inverse = 1.0 / epsilon;
  const double steps = std::round(inverse);
  const bool integral = std::abs(inverse - steps) < 1e-9 * inverse;
  const auto n_max = static_cast<long>(std::floor(inverse + 1e-9));
  for (long n = -n_max; n <= n_max; ++n) {
    double v = integral ? static_cast<double>(n) / steps : static_cast<double>(n) * epsilon;
    if (std::abs(std::abs(v) - 1.0) < 1e-9) v = v < 0 ? -1.0 : 1.0;
    if (n == 0) zero_ = points_.size();
    points_.push_back(v);
  }
  if (points_.front() > -1.0) {
    points_.insert(points_.begin(), -1.0);
    ++zero_;
  }
  if (points_.back() < 1.0) points_.push_back(1.0);
  boundaries_.reserve(points_.size() - 1);
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
    boundaries_.push_back(0.5 * (points_[i] + points_[i + 1]));
  }
}

std::size_t SliderGrid::nearest_index(double x) const {
  // Position i owns (b[i-1], b[i]); a tie on b goes outward.
  auto it = x >= 0.0 ? std::upper_bound(boundaries_.begin(), boundaries_.end(), x)
                     : std::lower_bound(boundaries_.begin(), boundaries_.end(), x);
  return static_cast<std::size_t>(it - boundaries_.begin());
}

std::optional<std::size_t> SliderGrid::index_of(double mu, double tol) const {
  if (!std::isfinite(mu)) return std::nullopt;
  const std::size_t i = nearest_index(mu);
  if (std::abs(points_[i] - mu) <= tol) return i;
  return std::nullopt;
}

double SliderGrid::snap(double mu) const {
  auto i = index_of(mu);
  if (!i) {
    fail(ErrorCode::invalid_input, "slider value " + std::to_string(mu) +
                                       " is not on the grid of step " + std::to_string(epsilon_));
  }
  return points_[*i];
}

double round_to_grid(double x, double epsilon) { return SliderGrid(epsilon).round(x); }

void validate(const SimulatedUser& user) {
  if (!(user.alpha_star > 0.0 && user.alpha_star <= 1.0)) {
    fail(ErrorCode::invalid_input, "alpha* must lie in (0, 1]");
  }
  if (!(user.epsilon > 0.0 && user.epsilon <= 1.0)) {
    fail(ErrorCode::invalid_input, "epsilon must lie in (0, 1]");
  }
  if (!(user.sigma >= 0.0)) fail(ErrorCode::invalid_input, "sigma must be non-negative");
  if (user.w_star.size() == 0 || !user.w_star.allFinite()) {
    fail(ErrorCode::invalid_input, "w* must be a finite non-empty vector");
  }
}

SimulatedUser random_user(std::size_t dimension, double alpha_star, double sigma, double epsilon,
                          Rng& rng) {
  SimulatedUser user{random_unit_vector(static_cast<Eigen::Index>(dimension), rng), alpha_star,
                     sigma, epsilon};
  validate(user);
  return user;
}

double noiseless_response(const SimulatedUser& user, Query query, const TrajectorySet& set) {
  const Eigen::VectorXd r = set.rewards(user.w_star);
  const double gap = r.maxCoeff() - r.minCoeff();
  if (!(gap > 0.0)) {
    fail(ErrorCode::degenerate_environment,
         "maximum reward gap is zero: every trajectory is equally good for this user");
  }
  const double diff = r[static_cast<Eigen::Index>(query.p)] - r[static_cast<Eigen::Index>(query.q)];
  const double saturation = user.alpha_star * gap;
  if (diff >= saturation) return 1.0;
  if (-diff >= saturation) return -1.0;
  return diff / saturation;
}

namespace {

double perturbed_response(const SimulatedUser& user, Query query, const TrajectorySet& set,
                          Rng& rng) {
  const double psi = noiseless_response(user, query, set);
  std::normal_distribution<double> noise(0.0, 1.0);
  return psi + user.sigma * noise(rng);
}

}  // namespace

double noisy_response(const SimulatedUser& user, Query query, const TrajectorySet& set, Rng& rng) {
  return SliderGrid(user.epsilon).round(perturbed_response(user, query, set, rng));
}

int soft_choice_response(const SimulatedUser& user, Query query, const TrajectorySet& set,
                         Rng& rng) {
  const double x = perturbed_response(user, query, set, rng);
  if (x >= 0.5) return 1;
  if (x <= -0.5) return -1;
  return 0;
}

}  // namespace scalefb
