#pragma once

#include "scalefb/random.hpp"
#include "scalefb/trajectory.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace scalefb {

/// Slider positions for step size epsilon: {-1} u {n*eps : |n*eps| <= 1} u {1},
/// ascending. Each position owns the interval between the midpoints to its
/// neighbours; the outermost positions own the tails.
class SliderGrid {
 public:
  explicit SliderGrid(double epsilon);

  double epsilon() const noexcept { return epsilon_; }
  std::size_t size() const noexcept { return points_.size(); }
  std::span<const double> points() const noexcept { return points_; }
  /// size() - 1 cell boundaries, ascending.
  std::span<const double> boundaries() const noexcept { return boundaries_; }

  /// Nearest position, clamped to [-1, 1]; midpoint ties round away from zero.
  std::size_t nearest_index(double x) const;
  double round(double x) const { return points_[nearest_index(x)]; }

  /// Index of the position within tol of mu, if any.
  std::optional<std::size_t> index_of(double mu, double tol = 1e-9) const;
  /// Canonical grid value for mu; throws invalid_input when mu is off-grid.
  double snap(double mu) const;

  /// Index of the zero position.
  std::size_t zero_index() const noexcept { return zero_; }

 private:
  double epsilon_;
  std::vector<double> points_;
  std::vector<double> boundaries_;
  std::size_t zero_ = 0;
};

double round_to_grid(double x, double epsilon);

struct SimulatedUser {
  WeightVector w_star;       // unit norm
  double alpha_star = 1.0;   // (0, 1]
  double sigma = 0.0;        // slider noise std dev
  double epsilon = 0.1;      // slider step
};

/// Validates ranges; throws invalid_input.
void validate(const SimulatedUser& user);

/// User with w* uniform on the unit sphere.
SimulatedUser random_user(std::size_t dimension, double alpha_star, double sigma, double epsilon,
                          Rng& rng);

/// Noiseless scale response: clamp(diff / (alpha* delta*), -1, 1).
/// Throws degenerate_environment when delta* is zero.
double noiseless_response(const SimulatedUser& user, Query query, const TrajectorySet& set);

/// round(psi + nu, eps) with nu ~ N(0, sigma^2). Consumes exactly one normal draw.
double noisy_response(const SimulatedUser& user, Query query, const TrajectorySet& set, Rng& rng);

/// Three-way soft choice: +1 prefer P, 0 about equal, -1 prefer Q. Thresholds
/// psi + nu at +-1/2 and consumes the same single normal draw as noisy_response.
int soft_choice_response(const SimulatedUser& user, Query query, const TrajectorySet& set, Rng& rng);

}  // namespace scalefb
