#include "selftrain/resources.hpp"

#include <string>
#include <utility>

#include "selftrain/error.hpp"

namespace selftrain::resources {
namespace detail {
extern const std::pair<std::string_view, std::string_view> kEntries[];
extern const unsigned long kEntryCount;
}  // namespace detail

std::string_view get(std::string_view name) {
  for (unsigned long i = 0; i < detail::kEntryCount; ++i)
    if (detail::kEntries[i].first == name) return detail::kEntries[i].second;
  throw Error(Errc::io_error, "unknown embedded resource: " + std::string(name));
}

bool contains(std::string_view name) {
  for (unsigned long i = 0; i < detail::kEntryCount; ++i)
    if (detail::kEntries[i].first == name) return true;
  return false;
}

std::vector<std::string_view> names() {
  std::vector<std::string_view> out;
  for (unsigned long i = 0; i < detail::kEntryCount; ++i) out.push_back(detail::kEntries[i].first);
  return out;
}

}  // namespace selftrain::resources

namespace selftrain {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::unresolved_target: return "UnresolvedTarget";
    case Errc::malformed_action: return "MalformedAction";
    case Errc::parse_error: return "ParseError";
    case Errc::unknown_api: return "UnknownApi";
    case Errc::arity_mismatch: return "ArityMismatch";
    case Errc::bad_argument: return "BadArgument";
    case Errc::empty_body: return "EmptyBody";
    case Errc::predicate_runtime: return "PredicateRuntimeError";
    case Errc::empty_label_set: return "EmptyLabelSet";
    case Errc::cycle_detected: return "CycleDetected";
    case Errc::empty_graph: return "EmptyGraph";
    case Errc::oracle_unavailable: return "OracleUnavailable";
    case Errc::empty_selection: return "EmptySelection";
    case Errc::synthesis_exhausted: return "SynthesisExhausted";
    case Errc::unrecognized_template: return "UnrecognizedTemplate";
    case Errc::all_steps_failed: return "AllStepsFailed";
    case Errc::missing_feedback: return "MissingFeedback";
    case Errc::rollout_budget_exceeded: return "RolloutBudgetExceeded";
    case Errc::hook_failed: return "HookFailed";
    case Errc::empty_pool: return "EmptyPool";
    case Errc::zero_traj_delta: return "ZeroTrajDelta";
    case Errc::empty_logs: return "EmptyLogs";
    case Errc::empty_judgments: return "EmptyJudgments";
    case Errc::invalid_action: return "InvalidAction";
    case Errc::timeout: return "Timeout";
    case Errc::http_status: return "HttpStatus";
    case Errc::bad_response_shape: return "BadResponseShape";
    case Errc::retries_exhausted: return "RetriesExhausted";
    case Errc::io_error: return "IoError";
    case Errc::format_error: return "FormatError";
    case Errc::config_error: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace selftrain
