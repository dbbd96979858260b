#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "selftrain/trajectory.hpp"

namespace selftrain {

enum class Provenance { expert, fully_passed, failure_relabel, pseudo_expert };
std::string_view to_string(Provenance p);
std::optional<Provenance> provenance_from(std::string_view s);

struct TrainingExample {
  std::string goal;
  Trajectory trajectory;
  Provenance provenance = Provenance::expert;
  bool operator==(const TrainingExample&) const = default;
};

/// One JSON object per line: {"goal","provenance","trajectory":{header fields + "steps"}}.
/// Lines are ordered by provenance, then task id, then input order.
std::string training_to_jsonl(const std::vector<TrainingExample>& examples);
/// Throws Error(format_error).
std::vector<TrainingExample> training_from_jsonl(std::string_view text);

/// Throws Error(io_error).
void export_training_file(const std::vector<TrainingExample>& examples, const std::filesystem::path& path);
std::vector<TrainingExample> read_training_file(const std::filesystem::path& path);

/// Dedup key: goal plus the serialized trajectory.
std::string example_key(const TrainingExample& ex);

}  // namespace selftrain
