#include "selftrain/trajectory_io.hpp"

#include <fstream>
#include <sstream>

#include "selftrain/error.hpp"

namespace selftrain::io {

using nlohmann::json;

namespace {

json element_to_json(const Element& e) {
  json j = {{"id", e.id}, {"tag", e.tag}, {"text", e.text}};
  if (e.bbox) j["bbox"] = {e.bbox->x, e.bbox->y, e.bbox->w, e.bbox->h};
  return j;
}

Element element_from_json(const json& j) {
  Element e;
  e.id = j.at("id").get<std::string>();
  e.tag = j.value("tag", "");
  e.text = j.value("text", "");
  if (auto it = j.find("bbox"); it != j.end() && !it->is_null()) {
    if (!it->is_array() || it->size() != 4) throw Error(Errc::format_error, "bbox must be [x, y, w, h]");
    e.bbox = BBox{(*it)[0].get<int>(), (*it)[1].get<int>(), (*it)[2].get<int>(), (*it)[3].get<int>()};
  }
  return e;
}

}  // namespace

json action_to_json(const Action& a) {
  json j = {{"kind", std::string(to_string(a.kind))}};
  if (a.target_id) j["target_id"] = *a.target_id;
  if (a.text) j["text"] = *a.text;
  if (a.answer) j["answer"] = *a.answer;
  if (a.direction) j["direction"] = std::string(to_string(*a.direction));
  if (a.app) j["app"] = *a.app;
  if (a.url) j["url"] = *a.url;
  return j;
}

static std::optional<std::string> opt_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

Action action_from_json(const json& j) {
  Action a;
  auto kind = action_kind_from(j.at("kind").get<std::string>());
  if (!kind) throw Error(Errc::format_error, "unknown action kind '" + j.at("kind").get<std::string>() + "'");
  a.kind = *kind;
  a.target_id = opt_string(j, "target_id");
  a.text = opt_string(j, "text");
  a.answer = opt_string(j, "answer");
  if (auto d = opt_string(j, "direction")) {
    a.direction = direction_from(*d);
    if (!a.direction) throw Error(Errc::format_error, "unknown scroll direction '" + *d + "'");
  }
  a.app = opt_string(j, "app");
  a.url = opt_string(j, "url");
  return a;
}

namespace {

bool is_header(const json& j) { return j.is_object() && !j.contains("t") && j.contains("task_id"); }

void apply_header(Trajectory& traj, const json& j) {
  traj.task_id = j.at("task_id").get<std::string>();
  traj.goal = j.value("goal", "");
  auto src = trajectory_source_from(j.value("source", "sampled"));
  if (!src) throw Error(Errc::format_error, "unknown trajectory source '" + j.value("source", "") + "'");
  traj.source = *src;
  auto fb = j.find("env_feedback");
  if (fb == j.end() || fb->is_null()) traj.env_feedback.reset();
  else if (fb->is_boolean()) traj.env_feedback = fb->get<bool>();
  else traj.env_feedback = fb->get<int>() != 0;
}

}  // namespace

json step_to_json(const Step& step) {
  json state = {{"elements", json::array()}};
  for (const auto& e : step.state.elements) state["elements"].push_back(element_to_json(e));
  if (step.state.url) state["url"] = *step.state.url;
  if (step.state.app_name) state["app_name"] = *step.state.app_name;
  if (step.state.screenshot_ref) state["screenshot_ref"] = *step.state.screenshot_ref;
  return {{"t", step.t}, {"state", state}, {"action", action_to_json(step.action)}};
}

Step step_from_json(const json& j) {
  Step s;
  s.t = j.at("t").get<int>();
  const auto& state = j.at("state");
  if (auto it = state.find("elements"); it != state.end())
    for (const auto& e : *it) s.state.elements.push_back(element_from_json(e));
  s.state.url = opt_string(state, "url");
  s.state.app_name = opt_string(state, "app_name");
  s.state.screenshot_ref = opt_string(state, "screenshot_ref");
  s.action = action_from_json(j.at("action"));
  return s;
}

json header_to_json(const Trajectory& traj) {
  json j = {{"task_id", traj.task_id}, {"goal", traj.goal}, {"source", std::string(to_string(traj.source))}};
  j["env_feedback"] = traj.env_feedback ? json(*traj.env_feedback ? 1 : 0) : json(nullptr);
  return j;
}

json trajectory_to_json(const Trajectory& traj) {
  json j = header_to_json(traj);
  j["steps"] = json::array();
  for (const auto& s : traj.steps) j["steps"].push_back(step_to_json(s));
  return j;
}

Trajectory trajectory_from_json(const json& j) {
  Trajectory traj;
  try {
    apply_header(traj, j);
    for (const auto& s : j.at("steps")) traj.steps.push_back(step_from_json(s));
  } catch (const json::exception& e) {
    throw Error(Errc::format_error, std::string("trajectory: ") + e.what());
  }
  return traj;
}

std::string write_jsonl(const Trajectory& traj) {
  std::string out = header_to_json(traj).dump() + "\n";
  for (const auto& s : traj.steps) out += step_to_json(s).dump() + "\n";
  return out;
}

std::string write_jsonl(const std::vector<Trajectory>& trajs) {
  std::string out;
  for (const auto& t : trajs) out += write_jsonl(t);
  return out;
}

std::vector<Trajectory> read_jsonl_many(std::string_view text) {
  std::vector<Trajectory> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      json j = json::parse(line);
      if (is_header(j)) {
        out.emplace_back();
        apply_header(out.back(), j);
      } else {
        if (out.empty()) throw Error(Errc::format_error, "step record before trajectory header");
        out.back().steps.push_back(step_from_json(j));
      }
    } catch (const json::exception& e) {
      throw Error(Errc::format_error, "line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

Trajectory read_jsonl(std::string_view text) {
  auto all = read_jsonl_many(text);
  if (all.size() != 1)
    throw Error(Errc::format_error, "expected exactly one trajectory, found " + std::to_string(all.size()));
  return std::move(all.front());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw Error(Errc::io_error, "cannot create '" + path.parent_path().string() + "': " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_error, "cannot write '" + path.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(Errc::io_error, "write failed for '" + path.string() + "'");
}

Trajectory load_trajectory(const std::filesystem::path& path) { return read_jsonl(read_file(path)); }

std::vector<Trajectory> load_trajectories(const std::filesystem::path& path) {
  return read_jsonl_many(read_file(path));
}

void save_trajectory(const std::filesystem::path& path, const Trajectory& traj) {
  write_file(path, write_jsonl(traj));
}

}  // namespace selftrain::io
