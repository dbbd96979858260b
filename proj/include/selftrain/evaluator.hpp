#pragma once

#include <optional>
#include <vector>

#include "selftrain/api_registry.hpp"
#include "selftrain/label_function.hpp"
#include "selftrain/trajectory.hpp"

namespace selftrain {

struct EvalResult {
  bool passed = false;
  std::optional<std::size_t> first_fail_index;
  /// Earliest matching step per evaluated guard. Evaluation stops at the first
  /// failing guard, so on failure the vector ends with that guard's nullopt.
  std::vector<std::optional<int>> match_steps;

  /// Latest guard match; the step at which the whole conjunction is satisfied.
  std::optional<int> completion_step() const;
};

/// Earliest step at which the call holds, else nullopt.
std::optional<int> evaluate_predicate(const PredicateCall& call, const Trajectory& traj,
                                      const ApiRegistry& registry = ApiRegistry::builtin());

/// Guards run in order; each scans the whole trajectory independently.
/// PredicateRuntimeError carries the failing guard index.
EvalResult evaluate(const LabelFunction& lf, const Trajectory& traj,
                    const ApiRegistry& registry = ApiRegistry::builtin());

}  // namespace selftrain
