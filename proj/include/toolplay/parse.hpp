#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "toolplay/errors.hpp"
#include "toolplay/relaxed_json.hpp"
#include "toolplay/tool.hpp"
#include "toolplay/values.hpp"

namespace toolplay {

enum class Block : std::size_t { think = 0, question = 1, available_tools = 2, tool_call_answer = 3 };

inline constexpr std::array<std::string_view, 4> kBlockTags = {"think", "question", "available_tools",
                                                               "tool_call_answer"};

/// Raw block bodies pulled out of a completion (surrounding whitespace trimmed).
struct BlockSet {
  std::array<std::optional<std::string>, 4> blocks;
  bool tags_ok = false;  // all four present with matching close tags
  std::vector<std::string> diagnostics;

  const std::optional<std::string>& operator[](Block b) const { return blocks[static_cast<std::size_t>(b)]; }
};

/// First `<tag>` ... following `</tag>`; nullopt when either side is missing.
inline std::optional<std::string> extract_block(std::string_view text, std::string_view tag) {
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  const std::size_t b = text.find(open);
  if (b == std::string_view::npos) return std::nullopt;
  const std::size_t body = b + open.size();
  const std::size_t e = text.find(close, body);
  if (e == std::string_view::npos) return std::nullopt;
  return trim(text.substr(body, e - body));
}

/// Order-insensitive extraction of the four generator blocks. First
/// occurrence of each block wins.
inline BlockSet extract_blocks(std::string_view completion) {
  BlockSet out;
  out.tags_ok = true;
  for (std::size_t i = 0; i < kBlockTags.size(); ++i) {
    out.blocks[i] = extract_block(completion, kBlockTags[i]);
    if (!out.blocks[i]) {
      out.tags_ok = false;
      const std::string tag(kBlockTags[i]);
      if (completion.find("<" + tag + ">") == std::string_view::npos)
        out.diagnostics.push_back("missing <" + tag + ">");
      else
        out.diagnostics.push_back("missing </" + tag + ">");
    }
  }
  return out;
}

struct NormalizeResult {
  std::vector<ToolCall> calls;
  std::optional<std::string> failure;

  bool ok() const { return !failure.has_value(); }
};

namespace detail {

inline std::optional<std::string> normalize_one(const nlohmann::json& raw, ToolCall& out) {
  if (!raw.is_object()) return "tool call is not an object";
  const nlohmann::json* obj = &raw;
  // OpenAI-style {"type": "function", "function": {...}} and similar wrappers.
  for (const char* wrapper : {"function", "tool_call"}) {
    auto it = obj->find(wrapper);
    if (it != obj->end() && it->is_object() && !obj->contains("name")) {
      obj = &*it;
      break;
    }
  }
  auto name_it = obj->find("name");
  if (name_it == obj->end() || !name_it->is_string() || name_it->get_ref<const std::string&>().empty())
    return "tool call has no name field";
  out.name = name_it->get<std::string>();

  nlohmann::json args = nlohmann::json::object();
  bool explicit_args = false;
  for (const char* key : {"arguments", "parameters", "args"}) {
    auto it = obj->find(key);
    if (it == obj->end()) continue;
    explicit_args = true;
    if (it->is_object()) {
      args = *it;
    } else if (it->is_string()) {
      // Some APIs ship arguments as an encoded string.
      LoadResult inner = load_relaxed(it->get_ref<const std::string&>());
      if (inner.ok() && inner.value.is_object()) args = std::move(inner.value);
      else if (!inner.ok() && inner.placeholder()) return "placeholder arguments in call '" + out.name + "'";
      else return "arguments of call '" + out.name + "' are not an object";
    } else if (!it->is_null()) {
      return "arguments of call '" + out.name + "' are not an object";
    }
    break;
  }
  if (!explicit_args) {
    for (const auto& [k, v] : obj->items())
      if (k != "name") args[k] = v;
  }
  for (const auto& [k, v] : args.items()) {
    if (!is_primitive(v)) return "nested value for argument '" + k + "' in call '" + out.name + "'";
  }
  out.arguments = std::move(args);
  return std::nullopt;
}

}  // namespace detail

/// Maps the common tool-call shapes onto canonical {name, arguments} calls.
/// All-or-nothing: a single bad call fails the whole list.
inline NormalizeResult normalize_calls(const nlohmann::json& parsed) {
  NormalizeResult r;
  const nlohmann::json* list = &parsed;
  nlohmann::json promoted;
  if (parsed.is_object()) {
    auto tc = parsed.find("tool_calls");
    if (tc != parsed.end() && tc->is_array() && !parsed.contains("name")) {
      list = &*tc;
    } else {
      promoted = nlohmann::json::array({parsed});
      list = &promoted;
    }
  }
  if (!list->is_array()) {
    r.failure = "expected a tool call object or list";
    return r;
  }
  for (std::size_t i = 0; i < list->size(); ++i) {
    ToolCall call;
    if (auto err = detail::normalize_one((*list)[i], call)) {
      r.calls.clear();
      r.failure = "call " + std::to_string(i) + ": " + *err;
      return r;
    }
    r.calls.push_back(std::move(call));
  }
  return r;
}

struct MenuResult {
  std::vector<ToolSpec> tools;
  std::optional<std::string> failure;
  bool placeholder = false;

  bool ok() const { return !failure.has_value(); }
};

namespace detail {

inline std::optional<std::string> read_required(const nlohmann::json& j, std::vector<std::string>& out) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_array()) return "required must be a list";
  for (const auto& r : j) {
    if (!r.is_string()) return "required entries must be strings";
    out.push_back(r.get<std::string>());
  }
  return std::nullopt;
}

inline std::optional<std::string> parse_tool_entry(const nlohmann::json& raw, ToolSpec& t) {
  if (!raw.is_object()) return "tool entry is not an object";
  const nlohmann::json* obj = &raw;
  if (auto fn = raw.find("function"); fn != raw.end() && fn->is_object() && !raw.contains("name")) obj = &*fn;

  auto name = obj->find("name");
  if (name == obj->end() || !name->is_string() || name->get_ref<const std::string&>().empty())
    return "tool entry missing name";
  t.name = name->get<std::string>();
  if (auto d = obj->find("description"); d != obj->end() && d->is_string()) t.description = d->get<std::string>();

  nlohmann::json params = obj->value("parameters", nlohmann::json::object());
  if (params.is_null()) params = nlohmann::json::object();
  if (!params.is_object()) return "parameters of tool '" + t.name + "' must be an object";

  std::vector<std::string> schema_required;
  const nlohmann::json* props = &params;
  // JSON-schema form: {"type": "object", "properties": {...}, "required": [...]}
  if (auto p = params.find("properties"); p != params.end() && p->is_object()) {
    props = &*p;
    if (auto r = params.find("required"); r != params.end())
      if (auto err = read_required(*r, schema_required)) return *err + " (tool '" + t.name + "')";
  }
  for (const auto& [pname, pspec] : props->items()) {
    ParamSpec ps;
    if (pspec.is_object()) {
      if (auto ty = pspec.find("type"); ty != pspec.end() && ty->is_string()) ps.type = ty->get<std::string>();
      if (auto de = pspec.find("description"); de != pspec.end() && de->is_string())
        ps.description = de->get<std::string>();
    } else if (pspec.is_string()) {
      ps.type = pspec.get<std::string>();
    } else {
      return "parameter '" + pname + "' of tool '" + t.name + "' is not an object";
    }
    t.parameters.emplace(pname, std::move(ps));
  }

  if (auto r = obj->find("required"); r != obj->end() && !r->is_null()) {
    if (auto err = read_required(*r, t.required)) return *err + " (tool '" + t.name + "')";
  } else {
    t.required = std::move(schema_required);
  }
  for (const auto& req : t.required)
    if (!t.parameters.contains(req))
      return "tool '" + t.name + "' requires undeclared parameter '" + req + "'";
  return std::nullopt;
}

}  // namespace detail

/// Parses an <available_tools> body into tool specs. Accepts flat parameter
/// maps and JSON-schema "properties" maps; a bad entry fails the whole menu.
inline MenuResult parse_tool_menu(std::string_view block) {
  MenuResult r;
  LoadResult loaded = load_relaxed(block);
  if (!loaded.ok()) {
    r.placeholder = loaded.placeholder();
    r.failure = "tool menu: " + loaded.failure->message + " at byte " + std::to_string(loaded.failure->offset);
    return r;
  }
  if (!loaded.value.is_array()) {
    r.failure = "tool menu must be a list";
    return r;
  }
  if (loaded.value.empty()) {
    r.failure = "tool menu is empty";
    return r;
  }
  for (const auto& entry : loaded.value) {
    ToolSpec t;
    if (auto err = detail::parse_tool_entry(entry, t)) {
      r.tools.clear();
      r.failure = *err;
      return r;
    }
    r.tools.push_back(std::move(t));
  }
  return r;
}

/// Parsed generator completion.
struct GeneratedTask {
  std::string think;
  std::string question;
  std::vector<ToolSpec> tools;
  std::vector<ToolCall> gold_calls;
  std::string raw;
};

/// Parse indicators. For generator completions they are the three format
/// terms plus normalization; for solver completions `tags_ok` is the
/// non-empty answer block, `gold_json_ok` means the answer block loaded and
/// `normalized_ok` means it normalized into at least one call.
struct ParseFlags {
  bool tags_ok = false;
  bool tools_json_ok = false;
  bool gold_json_ok = false;
  bool normalized_ok = false;
  bool placeholder = false;
};

struct ParseOutcome {
  ParseFlags flags;
  std::optional<GeneratedTask> task;             // generator side
  std::optional<std::vector<ToolCall>> calls;    // solver side
  std::vector<std::string> diagnostics;
  // Partial products kept for reward layers even when a later stage fails.
  std::string question;
  std::optional<std::vector<ToolSpec>> tools;
  std::optional<std::vector<ToolCall>> gold;
};

inline ParseOutcome parse_generator_completion(std::string_view completion) {
  ParseOutcome out;
  BlockSet blocks = extract_blocks(completion);
  out.flags.tags_ok = blocks.tags_ok;
  out.diagnostics = blocks.diagnostics;
  if (blocks[Block::question]) out.question = *blocks[Block::question];

  if (const auto& tb = blocks[Block::available_tools]) {
    MenuResult menu = parse_tool_menu(*tb);
    if (menu.ok()) {
      out.flags.tools_json_ok = true;
      out.tools = std::move(menu.tools);
    } else {
      out.flags.placeholder = out.flags.placeholder || menu.placeholder;
      out.diagnostics.push_back(*menu.failure);
    }
  }

  if (const auto& gb = blocks[Block::tool_call_answer]) {
    LoadResult loaded = load_relaxed(*gb);
    if (!loaded.ok()) {
      out.flags.placeholder = out.flags.placeholder || loaded.placeholder();
      out.diagnostics.push_back("gold calls: " + loaded.failure->message + " at byte " +
                                std::to_string(loaded.failure->offset));
    } else {
      NormalizeResult norm = normalize_calls(loaded.value);
      if (norm.ok() && !norm.calls.empty()) {
        out.flags.gold_json_ok = true;
        out.flags.normalized_ok = true;
        out.gold = std::move(norm.calls);
      } else {
        out.diagnostics.push_back("gold calls: " + norm.failure.value_or("empty call list"));
      }
    }
  }

  if (out.flags.tags_ok && out.flags.tools_json_ok && out.flags.gold_json_ok) {
    GeneratedTask t;
    t.think = *blocks[Block::think];
    t.question = out.question;
    t.tools = *out.tools;
    t.gold_calls = *out.gold;
    t.raw = std::string(completion);
    out.task = std::move(t);
  }
  return out;
}

/// Parses a solver completion. With `allow_bare` the whole text is treated
/// as the answer when no <tool_call_answer> block exists (benchmark
/// predictions); reward scoring leaves it off.
inline ParseOutcome parse_solver_completion(std::string_view completion, bool allow_bare = false) {
  ParseOutcome out;
  std::optional<std::string> answer = extract_block(completion, "tool_call_answer");
  if (!answer && allow_bare) answer = trim(completion);
  if (!answer || answer->empty()) {
    out.diagnostics.push_back("missing or empty <tool_call_answer>");
    return out;
  }
  out.flags.tags_ok = true;
  LoadResult loaded = load_relaxed(*answer);
  if (!loaded.ok()) {
    out.flags.placeholder = loaded.placeholder();
    out.diagnostics.push_back("answer: " + loaded.failure->message + " at byte " +
                              std::to_string(loaded.failure->offset));
    return out;
  }
  out.flags.gold_json_ok = true;
  NormalizeResult norm = normalize_calls(loaded.value);
  if (!norm.ok() || norm.calls.empty()) {
    out.diagnostics.push_back("answer: " + norm.failure.value_or("empty call list"));
    return out;
  }
  out.flags.normalized_ok = true;
  out.calls = std::move(norm.calls);
  return out;
}

inline nlohmann::json to_json(const GeneratedTask& t) {
  return {{"question", t.question}, {"tools", to_json(t.tools)}, {"gold_calls", to_json(t.gold_calls)}};
}

/// Parses the structured (already canonical) forms used in dataset and
/// benchmark files.
inline std::vector<ToolSpec> tools_from_json(const nlohmann::json& j) {
  std::vector<ToolSpec> out;
  if (!j.is_array()) throw ValidationError("tools must be a list");
  for (const auto& e : j) {
    ToolSpec t;
    if (auto err = detail::parse_tool_entry(e, t)) throw ValidationError(*err);
    out.push_back(std::move(t));
  }
  return out;
}

inline std::vector<ToolCall> calls_from_json(const nlohmann::json& j) {
  NormalizeResult r = normalize_calls(j);
  if (!r.ok()) throw ValidationError(*r.failure);
  return r.calls;
}

}  // namespace toolplay
