#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace scalefb {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Combines a base seed with stream coordinates (user, alpha index, purpose, ...).
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = mix64(base);
  for (auto p : parts) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

/// Uniform draw from the unit sphere in R^d.
inline Eigen::VectorXd random_unit_vector(Eigen::Index d, Rng& rng) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(d);
  double n2 = 0.0;
  do {
    for (Eigen::Index i = 0; i < d; ++i) v[i] = normal(rng);
    n2 = v.squaredNorm();
  } while (n2 < 1e-24);
  return v / std::sqrt(n2);
}

}  // namespace scalefb
