#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "selftrain/trajectory.hpp"

namespace selftrain {

struct SemanticDescription {
  int step_t = 1;
  std::string text;
  bool operator==(const SemanticDescription&) const = default;
};

/// The per-kind sentence templates and the tag → word mapping. Loaded from a
/// versioned JSON mapping (data/action_templates.json by default).
///
/// Placeholders: {tag_word} {element_text} {text} {direction} {app} {url} {answer}.
/// Element-targeting kinds carry one template for known tags and one for tags
/// that fall back to the unknown-tag word.
class TemplateTable {
 public:
  static const TemplateTable& builtin();
  static TemplateTable from_json(std::string_view json_text);

  int version() const { return version_; }
  const std::string& tag_word(std::string_view tag) const;
  bool is_known_tag(std::string_view tag) const;
  /// Inverse of tag_word for known tags (first tag in sorted order wins).
  std::optional<std::string> tag_for_word(std::string_view word) const;
  const std::string& unknown_tag_word() const { return unknown_word_; }
  const std::string& pattern(ActionKind kind, bool known_tag) const;

  std::string render(ActionKind kind, bool known_tag,
                     const std::map<std::string, std::string>& values) const;

 private:
  int version_ = 0;
  std::map<std::string, std::string, std::less<>> tag_words_;
  std::string unknown_word_;
  std::map<ActionKind, std::pair<std::string, std::string>> patterns_;  // known, unknown
};

/// Fills the template for the step's action kind from the referent element.
/// Throws Error(malformed_action) or Error(unresolved_target).
SemanticDescription extract_description(const Step& step,
                                        const TemplateTable& table = TemplateTable::builtin());

/// One description per step, in order. Errors carry the offending step index.
std::vector<SemanticDescription> describe_trajectory(
    const Trajectory& traj, const TemplateTable& table = TemplateTable::builtin());

}  // namespace selftrain
