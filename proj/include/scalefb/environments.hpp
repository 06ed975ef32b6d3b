#pragma once

#include "scalefb/random.hpp"
#include "scalefb/trajectory.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

namespace scalefb {

enum class EnvironmentKind { synthetic, fetch, file };

struct EnvironmentSpec {
  EnvironmentKind kind = EnvironmentKind::synthetic;
  std::size_t dimension = 10;         // synthetic only
  std::size_t n_trajectories = 200;
  std::uint64_t seed = 0;
  std::optional<std::string> path;    // file only
};

EnvironmentKind parse_environment_kind(const std::string& text);

/// n trajectories whose features point along random unit directions with
/// Gaussian jitter (sd 0.1), scaled into the unit ball. Duplicates are redrawn.
TrajectorySet synthetic_env(std::size_t dimension, std::size_t n, Rng& rng);

/// Number of valid Fetch feature combinations.
std::size_t fetch_combination_count();

/// n distinct trajectories from the Fetch serving lattice (d = 8):
/// speed, max height in {0, 1/3, 2/3, 1}; drink one-hot over {orange juice,
/// water, milk}; pan orientation, over-pan and hit-pan in {0, 1}, where the pan
/// can only be hit when moving over it.
TrajectorySet fetch_env(std::size_t n, Rng& rng);

/// Builds the set described by spec (seeded generators or a file).
std::shared_ptr<const TrajectorySet> make_environment(const EnvironmentSpec& spec);

/// JSON lines: header {"dimension": d[, "note": s]} then one
/// {"id", "features", "label", "media_ref"} object per line.
TrajectorySet load_trajset(const std::string& path);
void save_trajset(const TrajectorySet& set, const std::string& path);

}  // namespace scalefb
