#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "selftrain/abstraction.hpp"
#include "selftrain/pipeline.hpp"
#include "selftrain/sim_env.hpp"

namespace selftrain::cli {

/// Settings of a `loop` run. The config file is flat `key = value` text;
/// `#` starts a comment line. Keys are listed in config_keys().
struct RunConfig {
  std::filesystem::path world_spec;  // empty: builtin shop world
  std::vector<std::string> task_filter;
  sim::SamplingConfig sampling;
  OracleKind keystep_oracle = OracleKind::mock;
  OracleKind synth_oracle = OracleKind::mock;
  OracleKind intent_oracle = OracleKind::mock;
  bool intent_rewrite = false;
  int iterations = 3;
  std::filesystem::path output_dir = "runs";
  std::string finetune_hook;
  bool strict_ordered_scoring = false;
  std::uint64_t seed = 0;
  int workers = 1;
  sim::Behavior policy = sim::Behavior::improving;
  int step_budget = 12;
  double eval_temperature = 0.0;
  bool pseudo_expert_graphs = true;
  int max_attempts = 5;
  std::string llm_model = "gpt-4o";
  std::string guidance;

  /// Throws Error(config_error).
  void validate() const;
  PipelineConfig pipeline() const;
};

const std::vector<std::string>& config_keys();

/// Throws Error(config_error) naming the offending key.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);
/// Throws Error(config_error) with the line number and key.
RunConfig parse_config(std::string_view text, RunConfig base = {});
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

}  // namespace selftrain::cli
