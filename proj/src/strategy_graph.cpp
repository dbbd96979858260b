#include "selftrain/strategy_graph.hpp"

#include <algorithm>
#include <functional>
#include <queue>

#include "selftrain/error.hpp"

namespace selftrain {

std::string_view to_string(Category c) {
  switch (c) {
    case Category::FullyPassed: return "FullyPassed";
    case Category::PartiallyPassed: return "PartiallyPassed";
    case Category::Failed: return "Failed";
  }
  return "?";
}

namespace {
const std::set<VertexId> kNoVertices;
}

const LabelFunction& StrategyGraph::label(VertexId v) const {
  auto it = vertices_.find(v);
  if (it == vertices_.end()) throw Error(Errc::format_error, "no vertex " + std::to_string(v));
  return it->second;
}

VertexId StrategyGraph::add_vertex(const LabelFunction& lf) {
  VertexId id = next_id_;
  add_vertex(id, lf);
  return id;
}

void StrategyGraph::add_vertex(VertexId id, const LabelFunction& lf) {
  if (id <= 0 || vertices_.contains(id)) throw Error(Errc::format_error, "invalid or duplicate vertex id " + std::to_string(id));
  vertices_.emplace(id, canonicalize(lf));
  succ_[id];
  pred_[id];
  next_id_ = std::max(next_id_, id + 1);
}

void StrategyGraph::add_edge(VertexId from, VertexId to) {
  if (!contains(from) || !contains(to))
    throw Error(Errc::format_error, "edge " + std::to_string(from) + "->" + std::to_string(to) + " has a missing endpoint");
  if (edges_.insert({from, to}).second) {
    succ_[from].insert(to);
    pred_[to].insert(from);
  }
}

const std::set<VertexId>& StrategyGraph::successors(VertexId v) const {
  auto it = succ_.find(v);
  return it == succ_.end() ? kNoVertices : it->second;
}

const std::set<VertexId>& StrategyGraph::predecessors(VertexId v) const {
  auto it = pred_.find(v);
  return it == pred_.end() ? kNoVertices : it->second;
}

std::vector<VertexId> StrategyGraph::sources() const {
  std::vector<VertexId> out;
  for (const auto& [v, _] : vertices_)
    if (in_degree(v) == 0) out.push_back(v);
  return out;
}

std::vector<VertexId> StrategyGraph::sinks() const {
  std::vector<VertexId> out;
  for (const auto& [v, _] : vertices_)
    if (out_degree(v) == 0) out.push_back(v);
  return out;
}

bool StrategyGraph::reaches(VertexId from, VertexId to) const {
  if (from == to) return true;
  std::set<VertexId> seen{from};
  std::vector<VertexId> stack{from};
  while (!stack.empty()) {
    VertexId v = stack.back();
    stack.pop_back();
    for (VertexId w : successors(v)) {
      if (w == to) return true;
      if (seen.insert(w).second) stack.push_back(w);
    }
  }
  return false;
}

std::vector<VertexId> StrategyGraph::topological_order() const {
  std::map<VertexId, std::size_t> indeg;
  std::priority_queue<VertexId, std::vector<VertexId>, std::greater<>> ready;
  for (const auto& [v, _] : vertices_) {
    indeg[v] = in_degree(v);
    if (indeg[v] == 0) ready.push(v);
  }
  std::vector<VertexId> order;
  order.reserve(vertices_.size());
  while (!ready.empty()) {
    VertexId v = ready.top();
    ready.pop();
    order.push_back(v);
    for (VertexId w : successors(v))
      if (--indeg[w] == 0) ready.push(w);
  }
  if (order.size() != vertices_.size())
    throw Error(Errc::cycle_detected, "strategy graph for task '" + task_id_ + "' contains a cycle");
  return order;
}

bool StrategyGraph::is_acyclic() const {
  try {
    topological_order();
    return true;
  } catch (const Error&) {
    return false;
  }
}

bool StrategyGraph::operator==(const StrategyGraph& o) const {
  return task_id_ == o.task_id_ && vertices_ == o.vertices_ && edges_ == o.edges_;
}

StrategyGraph init_linear(const std::vector<LabelFunction>& lfs, const std::string& task_id, int iteration_created) {
  if (lfs.empty()) throw Error(Errc::empty_label_set, "cannot build a strategy graph from zero label functions");
  StrategyGraph g(task_id, iteration_created);
  std::optional<VertexId> prev;
  for (const auto& lf : lfs) {
    VertexId v = g.add_vertex(lf);
    if (prev) g.add_edge(*prev, v);
    prev = v;
  }
  return g;
}

std::vector<Path> enumerate_paths(const StrategyGraph& g) {
  g.topological_order();  // cycle check
  std::vector<Path> out;
  std::vector<VertexId> current;
  std::function<void(VertexId)> dfs = [&](VertexId v) {
    current.push_back(v);
    const auto& next = g.successors(v);
    if (next.empty()) out.push_back({current});
    for (VertexId w : next) dfs(w);
    current.pop_back();
  };
  for (VertexId s : g.sources()) dfs(s);
  return out;
}

std::uint64_t path_count(const StrategyGraph& g) {
  std::map<VertexId, std::uint64_t> ways;
  std::uint64_t total = 0;
  for (VertexId v : g.topological_order()) {
    std::uint64_t w = 0;
    if (g.in_degree(v) == 0) w = 1;
    for (VertexId u : g.predecessors(v)) w += ways[u];
    ways[v] = w;
    if (g.out_degree(v) == 0) total += w;
  }
  return total;
}

std::map<VertexId, EvalResult> evaluate_vertices(const StrategyGraph& g, const Trajectory& traj,
                                                 const ApiRegistry& registry) {
  std::map<VertexId, EvalResult> out;
  for (const auto& [v, lf] : g.vertices()) {
    try {
      out.emplace(v, evaluate(lf, traj, registry));
    } catch (const PredicateRuntimeError& e) {
      throw PredicateRuntimeError("vertex " + std::to_string(v) + ": " + e.what(), e.guard_index, v);
    }
  }
  return out;
}

int score_path(const Path& p, const std::map<VertexId, EvalResult>& evals, ScoringOptions opts) {
  int score = 0;
  int last_step = 0;
  for (VertexId v : p.vertex_ids) {
    const EvalResult& r = evals.at(v);
    if (!r.passed) continue;
    if (opts.strict_ordered) {
      int done = r.completion_step().value_or(0);
      if (done <= last_step) continue;
      last_step = done;
    }
    ++score;
  }
  return score;
}

int score_path(const Path& p, const StrategyGraph& g, const Trajectory& traj, ScoringOptions opts,
               const ApiRegistry& registry) {
  std::map<VertexId, EvalResult> evals;
  for (VertexId v : p.vertex_ids) {
    if (evals.contains(v)) continue;
    try {
      evals.emplace(v, evaluate(g.label(v), traj, registry));
    } catch (const PredicateRuntimeError& e) {
      throw PredicateRuntimeError("vertex " + std::to_string(v) + ": " + e.what(), e.guard_index, v);
    }
  }
  return score_path(p, evals, opts);
}

namespace {

// Reachable prefix classes over source-to-v paths.
constexpr unsigned kAllPass = 1u;
constexpr unsigned kAllFail = 2u;
constexpr unsigned kMixed = 4u;

Category categorize_unordered(const StrategyGraph& g, const std::map<VertexId, EvalResult>& evals) {
  std::map<VertexId, unsigned> state;
  unsigned at_sinks = 0;
  for (VertexId v : g.topological_order()) {
    const bool pass = evals.at(v).passed;
    unsigned s = pass ? kAllPass : kAllFail;
    if (g.in_degree(v) != 0) {
      unsigned in = 0;
      for (VertexId u : g.predecessors(v)) in |= state[u];
      s = 0;
      if (in & kAllPass) s |= pass ? kAllPass : kMixed;
      if (in & kAllFail) s |= pass ? kMixed : kAllFail;
      if (in & kMixed) s |= kMixed;
    }
    state[v] = s;
    if (g.out_degree(v) == 0) at_sinks |= s;
  }
  if (at_sinks & kAllPass) return Category::FullyPassed;
  if (at_sinks & kMixed) return Category::PartiallyPassed;
  return Category::Failed;
}

}  // namespace

Category categorize(const StrategyGraph& g, const std::map<VertexId, EvalResult>& evals, ScoringOptions opts) {
  if (g.empty()) throw Error(Errc::empty_graph, "cannot categorize against an empty strategy graph");
  if (!opts.strict_ordered) return categorize_unordered(g, evals);
  bool partial = false;
  for (const auto& p : enumerate_paths(g)) {
    int s = score_path(p, evals, opts);
    if (s == static_cast<int>(p.size())) return Category::FullyPassed;
    if (s > 0) partial = true;
  }
  return partial ? Category::PartiallyPassed : Category::Failed;
}

Category categorize(const StrategyGraph& g, const Trajectory& traj, ScoringOptions opts,
                    const ApiRegistry& registry) {
  if (g.empty()) throw Error(Errc::empty_graph, "cannot categorize against an empty strategy graph");
  return categorize(g, evaluate_vertices(g, traj, registry), opts);
}

std::optional<PathScore> best_path(const StrategyGraph& g, const std::map<VertexId, EvalResult>& evals,
                                   ScoringOptions opts) {
  std::optional<PathScore> best;
  auto rank = [](const PathScore& ps) {
    return std::make_tuple(ps.score == static_cast<int>(ps.path.size()), ps.score, -static_cast<long>(ps.path.size()));
  };
  for (auto& p : enumerate_paths(g)) {
    PathScore ps{std::move(p), 0};
    ps.score = score_path(ps.path, evals, opts);
    if (!best || rank(ps) > rank(*best)) best = std::move(ps);
  }
  return best;
}

namespace {

std::map<VertexId, std::string> vertex_keys(const StrategyGraph& g) {
  std::map<VertexId, std::string> keys;
  for (const auto& [v, lf] : g.vertices()) keys.emplace(v, print_label_function(lf));
  return keys;
}

bool has_strategy_keys(const StrategyGraph& g, const std::map<VertexId, std::string>& keys,
                       const std::vector<std::string>& want) {
  std::function<bool(VertexId, std::size_t)> walk = [&](VertexId v, std::size_t k) {
    if (keys.at(v) != want[k]) return false;
    if (k + 1 == want.size()) return g.out_degree(v) == 0;
    for (VertexId w : g.successors(v))
      if (walk(w, k + 1)) return true;
    return false;
  };
  for (VertexId s : g.sources())
    if (walk(s, 0)) return true;
  return false;
}

}  // namespace

bool has_strategy(const StrategyGraph& g, const std::vector<LabelFunction>& lfs) {
  if (lfs.empty() || g.empty()) return false;
  std::vector<std::string> want;
  for (const auto& lf : lfs) want.push_back(canonical_key(lf));
  return has_strategy_keys(g, vertex_keys(g), want);
}

StrategyGraph expand(const StrategyGraph& g, const std::vector<LabelFunction>& new_path_lfs, bool env_success) {
  if (new_path_lfs.empty()) throw Error(Errc::empty_label_set, "cannot expand with an empty label-function path");
  if (!env_success) return g;

  const auto keys = vertex_keys(g);
  std::vector<std::string> want;
  for (const auto& lf : new_path_lfs) want.push_back(canonical_key(lf));
  if (!g.empty() && has_strategy_keys(g, keys, want)) return g;

  std::map<std::string, std::vector<VertexId>> by_key;
  for (const auto& [v, k] : keys) by_key[k].push_back(v);

  StrategyGraph out = g;
  std::vector<VertexId> chosen;
  std::set<VertexId> used;
  const std::size_t n = new_path_lfs.size();

  for (std::size_t k = 0; k < n; ++k) {
    const bool first = k == 0;
    const bool last = k + 1 == n;
    const std::optional<VertexId> prev = first ? std::nullopt : std::optional<VertexId>(chosen.back());

    // The new strategy must stay a source-to-sink path of the result.
    auto position_ok = [&](VertexId c) {
      return (!first || out.in_degree(c) == 0) && (!last || out.out_degree(c) == 0);
    };
    // No cycles, and never splice an existing sink onto an existing source:
    // that would fuse two strategies into one and shrink the path count.
    auto edge_ok = [&](VertexId c) {
      if (!prev || out.has_edge(*prev, c)) return true;
      if (out.reaches(c, *prev)) return false;
      const bool prev_old_sink = g.contains(*prev) && out.out_degree(*prev) == 0;
      const bool c_old_source = out.in_degree(c) == 0;
      return !(prev_old_sink && c_old_source);
    };

    std::optional<VertexId> pick;
    auto it = by_key.find(want[k]);
    if (it != by_key.end()) {
      if (prev)
        for (VertexId c : it->second)
          if (!used.contains(c) && out.has_edge(*prev, c) && position_ok(c)) {
            pick = c;
            break;
          }
      if (!pick)
        for (VertexId c : it->second)
          if (!used.contains(c) && position_ok(c) && edge_ok(c)) {
            pick = c;
            break;
          }
    }
    if (!pick) {
      LabelFunction lf = new_path_lfs[k];
      lf.origin = LabelOrigin::expansion;
      pick = out.add_vertex(lf);
    }
    used.insert(*pick);
    if (prev && !out.has_edge(*prev, *pick)) out.add_edge(*prev, *pick);
    chosen.push_back(*pick);
  }

  if (!out.is_acyclic()) throw Error(Errc::cycle_detected, "expansion produced a cycle");
  if (path_count(out) < path_count(g)) {
    // Fall back to a vertex-disjoint copy of the strategy: exactly one more path.
    out = g;
    std::optional<VertexId> prev;
    for (const auto& src : new_path_lfs) {
      LabelFunction lf = src;
      lf.origin = LabelOrigin::expansion;
      VertexId v = out.add_vertex(lf);
      if (prev) out.add_edge(*prev, v);
      prev = v;
    }
  }
  return out;
}

}  // namespace selftrain
