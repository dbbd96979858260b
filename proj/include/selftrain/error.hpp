#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace selftrain {

enum class Errc {
  // trajectory model
  unresolved_target,
  malformed_action,
  // label DSL
  parse_error,
  unknown_api,
  arity_mismatch,
  bad_argument,
  empty_body,
  predicate_runtime,
  // strategy graph
  empty_label_set,
  cycle_detected,
  empty_graph,
  // abstraction
  oracle_unavailable,
  empty_selection,
  synthesis_exhausted,
  unrecognized_template,
  all_steps_failed,
  // extrapolation / pipeline
  missing_feedback,
  rollout_budget_exceeded,
  hook_failed,
  empty_pool,
  zero_traj_delta,
  empty_logs,
  empty_judgments,
  // sim
  invalid_action,
  // llm client
  timeout,
  http_status,
  bad_response_shape,
  retries_exhausted,
  // plumbing
  io_error,
  format_error,
  config_error,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Label-function syntax error with a 1-based source position.
class ParseError : public Error {
 public:
  ParseError(int line, int column, const std::string& msg)
      : Error(Errc::parse_error,
              "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

/// Raised while a predicate inspects a trajectory. The evaluator fills in the
/// guard index, the strategy graph the vertex id.
class PredicateRuntimeError : public Error {
 public:
  explicit PredicateRuntimeError(const std::string& msg) : Error(Errc::predicate_runtime, msg) {}
  PredicateRuntimeError(const std::string& msg, std::optional<std::size_t> guard,
                        std::optional<int> vertex)
      : Error(Errc::predicate_runtime, msg), guard_index(guard), vertex_id(vertex) {}

  std::optional<std::size_t> guard_index;
  std::optional<int> vertex_id;
};

class HttpStatusError : public Error {
 public:
  HttpStatusError(int status, const std::string& body)
      : Error(Errc::http_status, "HTTP status " + std::to_string(status) + ": " + body),
        status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

}  // namespace selftrain
