#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "selftrain/trajectory.hpp"

// Trajectory JSONL: a header object {"task_id","goal","source","env_feedback"}
// followed by one object per step. Unknown fields are ignored on read and never
// written. Several trajectories may be concatenated in one file; every header
// line starts a new one.
namespace selftrain::io {

nlohmann::json action_to_json(const Action& a);
Action action_from_json(const nlohmann::json& j);
nlohmann::json step_to_json(const Step& step);
Step step_from_json(const nlohmann::json& j);
nlohmann::json header_to_json(const Trajectory& traj);

/// Single-object form used when a trajectory is embedded in another record:
/// the header fields plus "steps".
nlohmann::json trajectory_to_json(const Trajectory& traj);
Trajectory trajectory_from_json(const nlohmann::json& j);

std::string write_jsonl(const Trajectory& traj);
std::string write_jsonl(const std::vector<Trajectory>& trajs);

/// Throws Error(format_error) with the offending line number.
Trajectory read_jsonl(std::string_view text);
std::vector<Trajectory> read_jsonl_many(std::string_view text);

Trajectory load_trajectory(const std::filesystem::path& path);
std::vector<Trajectory> load_trajectories(const std::filesystem::path& path);
void save_trajectory(const std::filesystem::path& path, const Trajectory& traj);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace selftrain::io
