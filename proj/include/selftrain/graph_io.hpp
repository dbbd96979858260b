#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "selftrain/api_registry.hpp"
#include "selftrain/strategy_graph.hpp"

namespace selftrain {

enum class GraphFormat { json, dot };

/// json: {"task_id","iteration_created","vertices":[{"id","label_fn"}],"edges":[[src,dst],...]}
///       with vertices and edges sorted by id and label_fn in canonical DSL text.
/// dot:  a digraph whose node labels show each vertex's first guard.
std::string export_graph(const StrategyGraph& g, GraphFormat format);

/// Inverse of export_graph(json). Throws Error(format_error) or DSL errors.
StrategyGraph import_graph(std::string_view json_text, const ApiRegistry& registry = ApiRegistry::builtin());

StrategyGraph load_graph(const std::filesystem::path& path, const ApiRegistry& registry = ApiRegistry::builtin());
void save_graph(const std::filesystem::path& path, const StrategyGraph& g);

/// `<task_id>.graph.json`, with path separators in the id replaced.
std::string graph_file_name(std::string_view task_id);

}  // namespace selftrain
