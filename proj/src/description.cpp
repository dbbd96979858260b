#include "selftrain/description.hpp"

#include <json.hpp>

#include "selftrain/error.hpp"
#include "selftrain/resources.hpp"

namespace selftrain {

using nlohmann::json;

TemplateTable TemplateTable::from_json(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(Errc::format_error, std::string("template table: ") + e.what());
  }
  TemplateTable t;
  try {
    t.version_ = j.at("version").get<int>();
    for (const auto& [tag, word] : j.at("tag_words").items()) t.tag_words_[tag] = word.get<std::string>();
    t.unknown_word_ = j.at("unknown_tag_word").get<std::string>();
    const auto& templates = j.at("templates");
    for (auto kind : kAllActionKinds) {
      auto it = templates.find(std::string(to_string(kind)));
      if (it == templates.end())
        throw Error(Errc::format_error, "template table has no entry for kind '" + std::string(to_string(kind)) + "'");
      if (it->is_string()) {
        t.patterns_[kind] = {it->get<std::string>(), it->get<std::string>()};
      } else {
        t.patterns_[kind] = {it->at("known_tag").get<std::string>(), it->at("unknown_tag").get<std::string>()};
      }
    }
  } catch (const json::exception& e) {
    throw Error(Errc::format_error, std::string("template table: ") + e.what());
  }
  return t;
}

const TemplateTable& TemplateTable::builtin() {
  static const TemplateTable table = from_json(resources::get("action_templates.json"));
  return table;
}

const std::string& TemplateTable::tag_word(std::string_view tag) const {
  auto it = tag_words_.find(tag);
  return it == tag_words_.end() ? unknown_word_ : it->second;
}

bool TemplateTable::is_known_tag(std::string_view tag) const { return tag_words_.find(tag) != tag_words_.end(); }

std::optional<std::string> TemplateTable::tag_for_word(std::string_view word) const {
  for (const auto& [tag, w] : tag_words_)
    if (w == word) return tag;
  return std::nullopt;
}

const std::string& TemplateTable::pattern(ActionKind kind, bool known_tag) const {
  const auto& p = patterns_.at(kind);
  return known_tag ? p.first : p.second;
}

std::string TemplateTable::render(ActionKind kind, bool known_tag,
                                  const std::map<std::string, std::string>& values) const {
  const std::string& pat = pattern(kind, known_tag);
  std::string out;
  for (std::size_t i = 0; i < pat.size();) {
    if (pat[i] == '{') {
      auto close = pat.find('}', i);
      if (close != std::string::npos) {
        auto key = pat.substr(i + 1, close - i - 1);
        auto it = values.find(key);
        if (it == values.end())
          throw Error(Errc::format_error, "template placeholder {" + key + "} has no value");
        out += it->second;
        i = close + 1;
        continue;
      }
    }
    out.push_back(pat[i++]);
  }
  return out;
}

SemanticDescription extract_description(const Step& step, const TemplateTable& table) {
  const Action& a = step.action;
  auto errs = action_field_errors(a);
  if (!errs.empty()) throw Error(Errc::malformed_action, "malformed " + std::string(to_string(a.kind)) + " action: " + errs.front());

  std::map<std::string, std::string> values;
  bool known = true;
  if (a.targets_element()) {
    const Element* el = step.state.find(*a.target_id);
    if (!el) throw Error(Errc::unresolved_target, "target id '" + *a.target_id + "' not present in state");
    known = table.is_known_tag(el->tag);
    values["tag_word"] = table.tag_word(el->tag);
    values["element_text"] = el->text;
  }
  switch (a.kind) {
    case ActionKind::type: values["text"] = *a.text; break;
    case ActionKind::scroll: values["direction"] = std::string(to_string(*a.direction)); break;
    case ActionKind::open_app: values["app"] = *a.app; break;
    case ActionKind::navigate: values["url"] = *a.url; break;
    case ActionKind::stop: values["answer"] = *a.answer; break;
    default: break;
  }
  return {step.t, table.render(a.kind, known, values)};
}

std::vector<SemanticDescription> describe_trajectory(const Trajectory& traj, const TemplateTable& table) {
  std::vector<SemanticDescription> out;
  out.reserve(traj.steps.size());
  for (const auto& step : traj.steps) {
    try {
      out.push_back(extract_description(step, table));
    } catch (const Error& e) {
      throw Error(e.code(), "step " + std::to_string(step.t) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace selftrain
