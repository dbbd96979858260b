#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cli/config.hpp"

namespace selftrain::cli {

/// Process exit codes.
enum ExitCode : int { kOk = 0, kInputError = 1, kEmptyResult = 2, kHookFailed = 3 };

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::filesystem::path> config;
};

struct AbstractOptions {
  std::filesystem::path trajectory;
  std::optional<std::string> goal;
  std::filesystem::path out_dir = ".";
  std::optional<OracleKind> oracle;  // overrides both key-step and synthesis oracles
};

struct CategorizeOptions {
  std::filesystem::path graph;
  std::vector<std::filesystem::path> trajectories;
};

struct ExpandOptions {
  std::filesystem::path graph;
  std::filesystem::path trajectory;
  std::optional<std::string> goal;
  std::optional<std::filesystem::path> out;
  std::optional<OracleKind> oracle;
};

struct LoopOptions {
  std::optional<int> iterations;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::string> hook;
};

struct SimulateOptions {
  std::vector<std::string> tasks;  // empty: every task
  std::optional<std::string> policy;
  std::optional<int> samples;
  std::optional<std::filesystem::path> out;
  bool routes = false;  // replay declared routes instead of running a policy
};

struct MetricsOptions {
  std::optional<std::filesystem::path> ngpt;       // CSV: perf_delta,traj_delta
  std::optional<std::filesystem::path> keystep;    // JSONL: predicted, truth, universe
  std::optional<std::filesystem::path> attempts;   // attempts.jsonl
  std::optional<std::filesystem::path> judgments;  // one judgment per line
};

struct ExportGraphOptions {
  std::filesystem::path graph;
  std::string format = "dot";
  std::optional<std::filesystem::path> out;
};

/// Config file (if any) plus global flag overrides.
RunConfig resolve_config(const GlobalOptions& g);

int cmd_abstract(const GlobalOptions& g, const AbstractOptions& o, std::ostream& out, std::ostream& err);
int cmd_categorize(const GlobalOptions& g, const CategorizeOptions& o, std::ostream& out, std::ostream& err);
int cmd_expand(const GlobalOptions& g, const ExpandOptions& o, std::ostream& out, std::ostream& err);
int cmd_loop(const GlobalOptions& g, const LoopOptions& o, std::ostream& out, std::ostream& err);
int cmd_simulate(const GlobalOptions& g, const SimulateOptions& o, std::ostream& out, std::ostream& err);
int cmd_metrics(const GlobalOptions& g, const MetricsOptions& o, std::ostream& out, std::ostream& err);
int cmd_export_graph(const GlobalOptions& g, const ExportGraphOptions& o, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches to a subcommand.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace selftrain::cli
