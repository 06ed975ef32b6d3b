#pragma once

#include "scalefb/belief.hpp"
#include "scalefb/trajectory.hpp"

#include <json.hpp>

#include <memory>
#include <string>
#include <vector>

namespace scalefb {

/// Dataset lines: {"p_id", "q_id", "mu", "epsilon"} with an optional "user"
/// key that groups records into per-user datasets.
nlohmann::json record_to_json(const FeedbackRecord& record, const TrajectorySet& set);
/// Resolves ids against set and validates mu against the record's grid.
FeedbackRecord record_from_json(const nlohmann::json& obj, const TrajectorySet& set);

std::vector<FeedbackRecord> load_dataset(const std::string& path, const TrajectorySet& set);
void save_dataset(const std::vector<FeedbackRecord>& records, const TrajectorySet& set,
                  const std::string& path);

/// Records grouped by their "user" key in order of first appearance; records
/// without the key form a single group.
std::vector<std::vector<FeedbackRecord>> load_grouped_dataset(const std::string& path,
                                                              const TrajectorySet& set);
void save_grouped_dataset(const std::vector<std::vector<FeedbackRecord>>& groups,
                          const TrajectorySet& set, const std::string& path);

/// {"samples": [[w..., alpha], ...], "weights": [...], "sigma": s}
nlohmann::json belief_to_json(const Belief& belief);
/// Restores a snapshot; the dataset is supplied separately.
Belief belief_from_json(const nlohmann::json& obj, std::shared_ptr<const TrajectorySet> set,
                        std::vector<FeedbackRecord> dataset);

}  // namespace scalefb
