#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "selftrain/api_registry.hpp"
#include "selftrain/evaluator.hpp"
#include "selftrain/label_function.hpp"
#include "selftrain/trajectory.hpp"

namespace selftrain {

using VertexId = int;

struct Path {
  std::vector<VertexId> vertex_ids;
  std::size_t size() const { return vertex_ids.size(); }
  bool operator==(const Path&) const = default;
  auto operator<=>(const Path&) const = default;
};

enum class Category { FullyPassed, PartiallyPassed, Failed };
std::string_view to_string(Category c);

/// A DAG of label functions. Every source-to-sink path is one strategy for the
/// task. Vertices store canonicalized label functions; ids are positive and
/// never reused.
class StrategyGraph {
 public:
  StrategyGraph() = default;
  explicit StrategyGraph(std::string task_id, int iteration_created = 0)
      : task_id_(std::move(task_id)), iteration_created_(iteration_created) {}

  const std::string& task_id() const { return task_id_; }
  int iteration_created() const { return iteration_created_; }
  bool empty() const { return vertices_.empty(); }
  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  const std::map<VertexId, LabelFunction>& vertices() const { return vertices_; }
  const std::set<std::pair<VertexId, VertexId>>& edges() const { return edges_; }
  const LabelFunction& label(VertexId v) const;
  bool contains(VertexId v) const { return vertices_.contains(v); }

  VertexId add_vertex(const LabelFunction& lf);
  void add_vertex(VertexId id, const LabelFunction& lf);
  /// Throws Error(format_error) when an endpoint is missing.
  void add_edge(VertexId from, VertexId to);

  bool has_edge(VertexId from, VertexId to) const { return edges_.contains({from, to}); }
  const std::set<VertexId>& successors(VertexId v) const;
  const std::set<VertexId>& predecessors(VertexId v) const;
  std::size_t in_degree(VertexId v) const { return predecessors(v).size(); }
  std::size_t out_degree(VertexId v) const { return successors(v).size(); }
  std::vector<VertexId> sources() const;
  std::vector<VertexId> sinks() const;

  bool reaches(VertexId from, VertexId to) const;
  bool is_acyclic() const;
  /// Kahn order with ascending-id tie break. Throws Error(cycle_detected).
  std::vector<VertexId> topological_order() const;

  /// Same task, ids, label functions (by guards) and edges.
  bool operator==(const StrategyGraph& o) const;

 private:
  std::string task_id_;
  int iteration_created_ = 0;
  VertexId next_id_ = 1;
  std::map<VertexId, LabelFunction> vertices_;
  std::set<std::pair<VertexId, VertexId>> edges_;
  std::map<VertexId, std::set<VertexId>> succ_;
  std::map<VertexId, std::set<VertexId>> pred_;
};

struct ScoringOptions {
  /// Matches must complete at strictly increasing steps along the path.
  bool strict_ordered = false;
};

/// Chain v1 -> ... -> vK in list order. Throws Error(empty_label_set).
StrategyGraph init_linear(const std::vector<LabelFunction>& lfs, const std::string& task_id,
                          int iteration_created = 0);

/// All source-to-sink paths, lexicographic by vertex-id sequence.
std::vector<Path> enumerate_paths(const StrategyGraph& g);

/// Number of source-to-sink paths via DP over a topological order.
std::uint64_t path_count(const StrategyGraph& g);

/// One evaluation per vertex; PredicateRuntimeError carries the vertex id.
std::map<VertexId, EvalResult> evaluate_vertices(const StrategyGraph& g, const Trajectory& traj,
                                                 const ApiRegistry& registry = ApiRegistry::builtin());

/// Number of path vertices whose label function passes the trajectory.
int score_path(const Path& p, const StrategyGraph& g, const Trajectory& traj, ScoringOptions opts = {},
               const ApiRegistry& registry = ApiRegistry::builtin());
int score_path(const Path& p, const std::map<VertexId, EvalResult>& evals, ScoringOptions opts = {});

/// FullyPassed iff some path scores |P|; PartiallyPassed iff some path scores
/// strictly between 0 and |P|; Failed otherwise. Throws Error(empty_graph).
Category categorize(const StrategyGraph& g, const Trajectory& traj, ScoringOptions opts = {},
                    const ApiRegistry& registry = ApiRegistry::builtin());
Category categorize(const StrategyGraph& g, const std::map<VertexId, EvalResult>& evals,
                    ScoringOptions opts = {});

struct PathScore {
  Path path;
  int score = 0;
};

/// Highest-ranked path by (fully passed, score, shorter), first in
/// enumeration order on ties. nullopt for an empty graph.
std::optional<PathScore> best_path(const StrategyGraph& g, const std::map<VertexId, EvalResult>& evals,
                                   ScoringOptions opts = {});

/// Merges a successful strategy into the graph. Identical (canonical) vertices
/// are shared where that keeps the new strategy a source-to-sink path, the
/// graph acyclic and the path count from shrinking; otherwise the vertex is
/// duplicated under a fresh id. With env_success false the graph is returned
/// unchanged. Throws Error(empty_label_set).
StrategyGraph expand(const StrategyGraph& g, const std::vector<LabelFunction>& new_path_lfs, bool env_success);

/// True if some source-to-sink path carries exactly these label functions.
bool has_strategy(const StrategyGraph& g, const std::vector<LabelFunction>& lfs);

}  // namespace selftrain
