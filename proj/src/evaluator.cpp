#include "selftrain/evaluator.hpp"

#include "selftrain/error.hpp"

namespace selftrain {

std::optional<int> EvalResult::completion_step() const {
  if (!passed) return std::nullopt;
  std::optional<int> last;
  for (const auto& m : match_steps)
    if (m && (!last || *m > *last)) last = m;
  return last;
}

std::optional<int> evaluate_predicate(const PredicateCall& call, const Trajectory& traj,
                                      const ApiRegistry& registry) {
  registry.check_call(call);
  const ApiEntry* entry = registry.find(call.api);
  return entry->eval(call.args, traj);
}

EvalResult evaluate(const LabelFunction& lf, const Trajectory& traj, const ApiRegistry& registry) {
  EvalResult result;
  result.match_steps.reserve(lf.guards.size());
  for (std::size_t i = 0; i < lf.guards.size(); ++i) {
    std::optional<int> hit;
    try {
      hit = evaluate_predicate(lf.guards[i], traj, registry);
    } catch (const PredicateRuntimeError& e) {
      throw PredicateRuntimeError("guard " + std::to_string(i) + " (" + lf.guards[i].api + "): " + e.what(), i,
                                  e.vertex_id);
    }
    result.match_steps.push_back(hit);
    if (!hit) {
      result.first_fail_index = i;
      return result;
    }
  }
  result.passed = true;
  return result;
}

}  // namespace selftrain
