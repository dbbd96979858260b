#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "selftrain/api_registry.hpp"
#include "selftrain/description.hpp"
#include "selftrain/error.hpp"
#include "selftrain/label_function.hpp"
#include "selftrain/llm_client.hpp"
#include "selftrain/trajectory.hpp"

namespace selftrain {

struct KeyStepSelection {
  std::vector<SemanticDescription> selected;  // subsequence of the input
  std::string oracle_name;
  std::optional<std::string> raw_response;
  std::vector<std::string> dropped_lines;  // reply lines matching no input
};

struct SynthesisAttempt {
  int attempt_no = 1;
  std::string produced_text;
  bool parse_ok = false;
  bool source_valid = false;
  std::string error;
};

struct SynthesisAttemptLog {
  std::string task_id;
  int step_t = 0;
  std::string desc_text;
  std::vector<SynthesisAttempt> attempts;
  std::optional<int> success_position;
};

enum class OracleKind { llm, mock };
std::string_view to_string(OracleKind k);
std::optional<OracleKind> oracle_kind_from(std::string_view s);

struct AbstractorConfig {
  int max_attempts = 5;
  OracleKind keystep_oracle = OracleKind::mock;
  OracleKind synth_oracle = OracleKind::mock;
  /// Fills <<GUIDANCE>> in the synthesis prompt.
  std::string guidance;
  /// Bound on concurrent synthesis of distinct key steps.
  int workers = 1;

  /// Throws Error(config_error).
  void validate() const;
};

class KeyStepOracle {
 public:
  virtual ~KeyStepOracle() = default;
  virtual std::string name() const = 0;
  virtual KeyStepSelection select(const std::vector<SemanticDescription>& descs, const std::string& goal) = 0;
};

class SynthesisOracle {
 public:
  virtual ~SynthesisOracle() = default;
  virtual std::string name() const = 0;
  /// Candidate program text for one key step. Throws Error(oracle_unavailable).
  virtual std::string propose(const SemanticDescription& desc, int attempt_no) = 0;
};

/// Content-token overlap with the goal, plus the final stop step.
class MockKeyStepOracle final : public KeyStepOracle {
 public:
  MockKeyStepOracle();
  explicit MockKeyStepOracle(std::set<std::string> stopwords) : stopwords_(std::move(stopwords)) {}
  std::string name() const override { return "mock"; }
  KeyStepSelection select(const std::vector<SemanticDescription>& descs, const std::string& goal) override;

 private:
  std::set<std::string> stopwords_;
};

/// Template inversion; the same candidate on every attempt.
class MockSynthesisOracle final : public SynthesisOracle {
 public:
  std::string name() const override { return "mock"; }
  std::string propose(const SemanticDescription& desc, int attempt_no) override;
};

class LlmKeyStepOracle final : public KeyStepOracle {
 public:
  LlmKeyStepOracle(std::shared_ptr<llm::Client> client, std::string model)
      : client_(std::move(client)), model_(std::move(model)) {}
  std::string name() const override { return "llm"; }
  KeyStepSelection select(const std::vector<SemanticDescription>& descs, const std::string& goal) override;

 private:
  std::shared_ptr<llm::Client> client_;
  std::string model_;
};

class LlmSynthesisOracle final : public SynthesisOracle {
 public:
  LlmSynthesisOracle(std::shared_ptr<llm::Client> client, std::string model, std::string guidance,
                     const ApiRegistry& registry = ApiRegistry::builtin());
  std::string name() const override { return "llm"; }
  std::string propose(const SemanticDescription& desc, int attempt_no) override;
  const std::string& system_prompt() const { return prompt_; }

 private:
  std::shared_ptr<llm::Client> client_;
  std::string model_;
  std::string prompt_;
};

/// The key-step prompt's user message: objective plus numbered descriptions.
std::string keystep_user_message(const std::vector<SemanticDescription>& descs, const std::string& goal);

/// Reads a numbered-list reply. Lines are matched verbatim (after trimming the
/// list marker) against input descriptions; order follows the input.
KeyStepSelection parse_keystep_reply(const std::vector<SemanticDescription>& descs, std::string_view reply);

/// Synthesis prompt with <<API_FUNCTIONS>> and <<GUIDANCE>> filled in.
std::string synthesis_prompt(const ApiRegistry& registry, std::string_view guidance);

/// Throws Error(empty_selection) when the oracle selects nothing.
KeyStepSelection identify_key_steps(const std::vector<SemanticDescription>& descs, const std::string& goal,
                                    KeyStepOracle& oracle);

KeyStepSelection mock_key_step_heuristic(const std::vector<SemanticDescription>& descs, const std::string& goal);
KeyStepSelection mock_key_step_heuristic(const std::vector<SemanticDescription>& descs, const std::string& goal,
                                         const std::set<std::string>& stopwords);

/// The shipped English stopword list.
const std::set<std::string>& default_stopwords();

/// Action kind whose template produced `text`, if any.
std::optional<ActionKind> template_kind(std::string_view text, const TemplateTable& table = TemplateTable::builtin());

/// One-guard DSL text for a templated description. Throws
/// Error(unrecognized_template).
std::string mock_synthesizer(const SemanticDescription& desc, const TemplateTable& table = TemplateTable::builtin());

class SynthesisExhausted : public Error {
 public:
  SynthesisExhausted(const std::string& msg, SynthesisAttemptLog log)
      : Error(Errc::synthesis_exhausted, msg), log(std::move(log)) {}
  SynthesisAttemptLog log;
};

struct SynthesisResult {
  LabelFunction lf;
  SynthesisAttemptLog log;
};

/// Accepts the first candidate that parses and passes on `source`. Throws
/// SynthesisExhausted (carrying the log) after cfg.max_attempts failures.
SynthesisResult synthesize_label_fn(const SemanticDescription& desc, const Trajectory& source,
                                    const ApiRegistry& registry, SynthesisOracle& oracle,
                                    const AbstractorConfig& cfg);

struct AbstractionResult {
  std::vector<LabelFunction> lfs;  // key-step order
  KeyStepSelection selection;
  std::vector<SynthesisAttemptLog> logs;  // one per key step, same order
  std::vector<std::string> notes;         // skipped steps and dropped reply lines
};

/// describe -> identify key steps -> synthesize each in order. Steps whose
/// synthesis exhausts are skipped. Throws Error(all_steps_failed) when nothing
/// is produced, including an empty key-step selection.
AbstractionResult abstract_trajectory(const Trajectory& traj, const std::string& goal, KeyStepOracle& keystep,
                                      SynthesisOracle& synth, const AbstractorConfig& cfg,
                                      const ApiRegistry& registry = ApiRegistry::builtin());

std::string attempt_logs_to_jsonl(const std::vector<SynthesisAttemptLog>& logs);
/// Throws Error(format_error).
std::vector<SynthesisAttemptLog> attempt_logs_from_jsonl(std::string_view text);

}  // namespace selftrain
