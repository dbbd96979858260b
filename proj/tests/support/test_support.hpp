#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "selftrain/label_function.hpp"
#include "selftrain/strategy_graph.hpp"
#include "selftrain/trajectory.hpp"

namespace testsupport {

using namespace selftrain;

Element el(std::string id, std::string tag, std::string text);
UiState ui(std::vector<Element> elements, std::optional<std::string> url = std::nullopt);
Trajectory make_traj(std::string task_id, std::string goal, std::vector<std::pair<UiState, Action>> steps,
                     TrajectorySource source = TrajectorySource::sampled,
                     std::optional<bool> env_feedback = std::nullopt);

LabelFunction lf(std::vector<PredicateCall> guards);
LabelFunction lf_text(const std::string& dsl);

std::string slurp(const std::filesystem::path& p);
std::filesystem::path data_path(const std::string& rel);
/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

// ---------------------------------------------------------------------------
// Random instances. Texts come from a small ASCII vocabulary so guards match
// often and the oracles below can compare bytes directly.

struct Gen {
  explicit Gen(std::uint64_t seed) : rng(seed) {}
  std::mt19937_64 rng;

  int uniform(int lo, int hi);  // inclusive
  bool coin(double p = 0.5);
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(uniform(0, static_cast<int>(v.size()) - 1))];
  }

  PredicateCall call();
  LabelFunction label_function(int max_guards = 3);
  Trajectory trajectory(int max_steps = 6);
  /// Random DAG on up to max_vertices vertices (edges only from lower to
  /// higher insertion index, so acyclic by construction).
  StrategyGraph dag(int max_vertices, int max_guards = 2);
};

/// Text that stresses quoting: quotes, backslashes, newlines, non-ASCII.
std::string awkward_string(Gen& g);
/// A random label function whose text arguments are awkward strings.
LabelFunction awkward_lf(Gen& g);

const std::vector<std::string>& vocab();

// ---------------------------------------------------------------------------
// Independent oracles.

/// Earliest matching step by exhaustive scan, builtin semantics re-stated
/// directly over the ASCII vocabulary.
std::optional<int> oracle_predicate(const PredicateCall& call, const Trajectory& traj);
bool oracle_passes(const LabelFunction& lf, const Trajectory& traj);

std::vector<std::vector<VertexId>> oracle_paths(const StrategyGraph& g);
bool oracle_acyclic(const StrategyGraph& g);
/// Literal three-way rule over every enumerated path.
Category oracle_categorize(const StrategyGraph& g, const Trajectory& traj);
int oracle_score(const std::vector<VertexId>& path, const StrategyGraph& g, const Trajectory& traj);

/// Recursive-descent check of the DOT subset: digraph ID { stmt* } with node,
/// edge and attribute statements.
bool dot_grammar_ok(const std::string& dot, std::string* why = nullptr);

// ---------------------------------------------------------------------------
// Reference generated label functions (Python, verbatim) with their expected
// DSL form and a trajectory each should accept. The first two trajectories are
// replays of the matching simulated routes; the last two are hand-built
// mobile traces.

struct CaseStudy {
  std::string name;
  std::string python;
  std::string dsl;
  Trajectory trajectory;
};

const std::vector<CaseStudy>& case_studies();

}  // namespace testsupport
