#include "selftrain/training_io.hpp"

#include <algorithm>
#include <numeric>

#include "selftrain/error.hpp"
#include "selftrain/text.hpp"
#include "selftrain/trajectory_io.hpp"

namespace selftrain {

using nlohmann::json;

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::expert: return "expert";
    case Provenance::fully_passed: return "fully_passed";
    case Provenance::failure_relabel: return "failure_relabel";
    case Provenance::pseudo_expert: return "pseudo_expert";
  }
  return "?";
}

std::optional<Provenance> provenance_from(std::string_view s) {
  for (auto p : {Provenance::expert, Provenance::fully_passed, Provenance::failure_relabel, Provenance::pseudo_expert})
    if (to_string(p) == s) return p;
  return std::nullopt;
}

std::string example_key(const TrainingExample& ex) {
  return ex.goal + '\n' + io::trajectory_to_json(ex.trajectory).dump();
}

std::string training_to_jsonl(const std::vector<TrainingExample>& examples) {
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = examples[a];
    const auto& y = examples[b];
    if (x.provenance != y.provenance) return x.provenance < y.provenance;
    return x.trajectory.task_id < y.trajectory.task_id;
  });
  std::string out;
  for (auto i : order) {
    const auto& ex = examples[i];
    json j = {{"goal", ex.goal},
              {"provenance", std::string(to_string(ex.provenance))},
              {"trajectory", io::trajectory_to_json(ex.trajectory)}};
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<TrainingExample> training_from_jsonl(std::string_view text) {
  std::vector<TrainingExample> out;
  int line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      TrainingExample ex;
      ex.goal = j.at("goal").get<std::string>();
      auto p = provenance_from(j.at("provenance").get<std::string>());
      if (!p) throw Error(Errc::format_error, "unknown provenance");
      ex.provenance = *p;
      ex.trajectory = io::trajectory_from_json(j.at("trajectory"));
      out.push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw Error(Errc::format_error, "training file line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(Errc::format_error, "training file line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void export_training_file(const std::vector<TrainingExample>& examples, const std::filesystem::path& path) {
  io::write_file(path, training_to_jsonl(examples));
}

std::vector<TrainingExample> read_training_file(const std::filesystem::path& path) {
  return training_from_jsonl(io::read_file(path));
}

}  // namespace selftrain
