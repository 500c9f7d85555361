#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "toolplay/default_prompts.hpp"
#include "toolplay/errors.hpp"
#include "toolplay/taskspec.hpp"
#include "toolplay/tool.hpp"

namespace toolplay {

/// Text template with named slots. Braced templates mark slots as `{name}`
/// (other braces, e.g. JSON examples, are left alone); bare templates use the
/// slot names themselves as tokens (USER_QUERY, TOOL_MENU).
class PromptTemplate {
 public:
  enum class Style { braced, bare };

  PromptTemplate() = default;
  PromptTemplate(std::string text, std::vector<std::string> slots, Style style = Style::braced)
      : text_(std::move(text)), slots_(std::move(slots)), style_(style) {
    validate();
  }

  const std::string& text() const { return text_; }
  const std::vector<std::string>& slots() const { return slots_; }

  std::string render(const std::map<std::string, std::string>& values) const {
    for (const auto& s : slots_)
      if (!values.contains(s)) throw TemplateError("no value for slot '" + s + "'");
    std::string out;
    out.reserve(text_.size() + 256);
    std::size_t i = 0;
    while (i < text_.size()) {
      if (auto m = slot_at(i)) {
        out += values.at(m->name);
        i += m->length;
      } else {
        out.push_back(text_[i++]);
      }
    }
    return out;
  }

 private:
  struct Match {
    std::string name;
    std::size_t length;
  };

  static bool ident_char(char c, bool first) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || (!first && c >= '0' && c <= '9');
  }

  // `{identifier}` starting at i, declared or not.
  std::optional<std::string> braced_ident_at(std::size_t i) const {
    if (text_[i] != '{') return std::nullopt;
    std::size_t j = i + 1;
    while (j < text_.size() && ident_char(text_[j], j == i + 1)) ++j;
    if (j == i + 1 || j >= text_.size() || text_[j] != '}') return std::nullopt;
    return text_.substr(i + 1, j - i - 1);
  }

  std::optional<Match> slot_at(std::size_t i) const {
    if (style_ == Style::braced) {
      auto id = braced_ident_at(i);
      if (id && std::find(slots_.begin(), slots_.end(), *id) != slots_.end()) return Match{*id, id->size() + 2};
      return std::nullopt;
    }
    for (const auto& s : slots_)
      if (std::string_view(text_).substr(i).starts_with(s)) return Match{s, s.size()};
    return std::nullopt;
  }

  void validate() const {
    std::map<std::string, int> seen;
    for (std::size_t i = 0; i < text_.size(); ++i) {
      if (style_ == Style::braced) {
        if (auto id = braced_ident_at(i)) {
          if (std::find(slots_.begin(), slots_.end(), *id) == slots_.end())
            throw TemplateError("unknown slot '{" + *id + "}' in template");
          ++seen[*id];
        }
      } else if (auto m = slot_at(i)) {
        ++seen[m->name];
        i += m->length - 1;
      }
    }
    for (const auto& s : slots_)
      if (!seen.contains(s)) throw TemplateError("slot '" + s + "' does not occur in template");
  }

  std::string text_;
  std::vector<std::string> slots_;
  Style style_ = Style::braced;
};

struct PromptBundle {
  PromptTemplate generator;
  PromptTemplate solver;
  PromptTemplate judge;

  static PromptBundle from_texts(std::string generator_text, std::string solver_text, std::string judge_text) {
    return PromptBundle{
        PromptTemplate(std::move(generator_text), {"domain", "context_type", "tool_menu_size", "num_calls"}),
        PromptTemplate(std::move(solver_text), {"USER_QUERY", "TOOL_MENU"}, PromptTemplate::Style::bare),
        PromptTemplate(std::move(judge_text), {})};
  }

  static const PromptBundle& defaults() {
    static const PromptBundle kDefaults =
        from_texts(default_prompts::kGenerator, default_prompts::kSolver, default_prompts::kJudge);
    return kDefaults;
  }

  /// Loads generator.txt / solver.txt / judge.txt from `dir`; missing files
  /// fall back to the built-in text.
  static PromptBundle load(const std::filesystem::path& dir) {
    auto read = [&](const char* file, const char* fallback) {
      std::ifstream in(dir / file, std::ios::binary);
      if (!in) return std::string(fallback);
      std::ostringstream ss;
      ss << in.rdbuf();
      return ss.str();
    };
    return from_texts(read("generator.txt", default_prompts::kGenerator),
                      read("solver.txt", default_prompts::kSolver), read("judge.txt", default_prompts::kJudge));
  }
};

inline std::string render_generator_prompt(const TaskSpec& spec,
                                           const PromptBundle& bundle = PromptBundle::defaults()) {
  return bundle.generator.render({{"domain", spec.domain},
                                  {"context_type", std::string(to_string(spec.context_type))},
                                  {"tool_menu_size", std::to_string(spec.tool_menu_size)},
                                  {"num_calls", std::to_string(spec.num_gold_calls)}});
}

inline std::string serialize_menu(const std::vector<ToolSpec>& menu) {
  return to_json(menu).dump(2, ' ', false, nlohmann::json::error_handler_t::replace);
}

inline std::string render_solver_prompt(std::string_view question, const std::vector<ToolSpec>& menu,
                                        const PromptBundle& bundle = PromptBundle::defaults()) {
  if (menu.empty()) throw ValidationError("solver prompt needs a non-empty tool menu");
  return bundle.solver.render({{"USER_QUERY", std::string(question)}, {"TOOL_MENU", serialize_menu(menu)}});
}

/// The judge template carries instructions only; the example under review
/// is appended as labeled sections.
inline std::string render_judge_prompt(std::string_view question, const std::vector<ToolSpec>& menu,
                                       const std::vector<ToolCall>& calls,
                                       const PromptBundle& bundle = PromptBundle::defaults()) {
  std::string out = bundle.judge.render({});
  if (!out.empty() && out.back() != '\n') out.push_back('\n');
  out += "\nUser Question:\n";
  out += question;
  out += "\n\nAvailable Tools:\n";
  out += serialize_menu(menu);
  out += "\n\nTool Call Answer:\n";
  out += to_json(calls).dump(2, ' ', false, nlohmann::json::error_handler_t::replace);
  out += "\n";
  return out;
}

/// Recovers the control tuple from a rendered generator prompt.
inline std::optional<TaskSpec> parse_control_spec(std::string_view prompt) {
  auto field = [&](std::string_view label) -> std::optional<std::string> {
    const std::size_t p = prompt.find(label);
    if (p == std::string_view::npos) return std::nullopt;
    const std::size_t b = p + label.size();
    std::size_t e = prompt.find('\n', b);
    if (e == std::string_view::npos) e = prompt.size();
    std::string v(prompt.substr(b, e - b));
    // Strip trailing annotations such as "  (single_turn or multi_turn)".
    if (auto cut = v.find(' '); cut != std::string::npos) v.resize(cut);
    return v;
  };
  auto d = field("- Domain: ");
  auto c = field("- Context type: ");
  auto m = field("- Number of available tools: ");
  auto n = field("- Number of gold tool calls: ");
  if (!d || !c || !m || !n) return std::nullopt;
  try {
    TaskSpec s;
    s.domain = *d;
    s.context_type = context_type_from_string(*c);
    s.tool_menu_size = std::stoi(*m);
    s.num_gold_calls = std::stoi(*n);
    return s;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace toolplay
