#include "selftrain/graph_io.hpp"

#include <json.hpp>

#include "selftrain/error.hpp"
#include "selftrain/trajectory_io.hpp"

namespace selftrain {

using nlohmann::json;

namespace {

std::string dot_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string first_guard_label(const LabelFunction& lf) {
  const auto& g = lf.guards.front();
  std::string s = g.api + "(";
  for (std::size_t i = 0; i < g.args.size(); ++i) s += (i ? "," : "") + quote_dsl_string(g.args[i]);
  s += ")";
  if (lf.guards.size() > 1) s += " +" + std::to_string(lf.guards.size() - 1);
  return s;
}

}  // namespace

std::string export_graph(const StrategyGraph& g, GraphFormat format) {
  if (format == GraphFormat::json) {
    json j = {{"task_id", g.task_id()}, {"iteration_created", g.iteration_created()}};
    j["vertices"] = json::array();
    for (const auto& [id, lf] : g.vertices())
      j["vertices"].push_back({{"id", id}, {"label_fn", print_label_function(lf)}});
    j["edges"] = json::array();
    for (const auto& [a, b] : g.edges()) j["edges"].push_back({a, b});
    return j.dump(2) + "\n";
  }
  std::string out = "digraph " + dot_quote(g.task_id()) + " {\n";
  out += "  node [shape=box];\n";
  for (const auto& [id, lf] : g.vertices())
    out += "  v" + std::to_string(id) + " [label=" + dot_quote(first_guard_label(lf)) + "];\n";
  for (const auto& [a, b] : g.edges()) out += "  v" + std::to_string(a) + " -> v" + std::to_string(b) + ";\n";
  out += "}\n";
  return out;
}

StrategyGraph import_graph(std::string_view json_text, const ApiRegistry& registry) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(Errc::format_error, std::string("graph json: ") + e.what());
  }
  try {
    StrategyGraph g(j.at("task_id").get<std::string>(), j.value("iteration_created", 0));
    for (const auto& v : j.at("vertices")) {
      LabelFunction lf = parse_label_function(v.at("label_fn").get<std::string>(), registry);
      g.add_vertex(v.at("id").get<VertexId>(), lf);
    }
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw Error(Errc::format_error, "graph edge must be [src, dst]");
      g.add_edge(e[0].get<VertexId>(), e[1].get<VertexId>());
    }
    if (!g.is_acyclic()) throw Error(Errc::cycle_detected, "imported graph contains a cycle");
    return g;
  } catch (const json::exception& e) {
    throw Error(Errc::format_error, std::string("graph json: ") + e.what());
  }
}

StrategyGraph load_graph(const std::filesystem::path& path, const ApiRegistry& registry) {
  return import_graph(io::read_file(path), registry);
}

void save_graph(const std::filesystem::path& path, const StrategyGraph& g) {
  io::write_file(path, export_graph(g, GraphFormat::json));
}

std::string graph_file_name(std::string_view task_id) {
  std::string name(task_id);
  for (auto& c : name)
    if (c == '/' || c == '\\') c = '_';
  return name + ".graph.json";
}

}  // namespace selftrain
