#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace toolplay {

struct ParamSpec {
  std::string type;
  std::string description;

  friend bool operator==(const ParamSpec&, const ParamSpec&) = default;
};

/// One entry of a tool menu.
struct ToolSpec {
  std::string name;
  std::string description;
  std::map<std::string, ParamSpec> parameters;
  std::vector<std::string> required;

  friend bool operator==(const ToolSpec&, const ToolSpec&) = default;
};

/// Canonical tool call: a name plus a flat object of primitive arguments.
/// `arguments` is always a JSON object; nlohmann's object map keeps keys in
/// ascending byte order, which gives the canonical wire form for free.
struct ToolCall {
  std::string name;
  nlohmann::json arguments = nlohmann::json::object();

  friend bool operator==(const ToolCall& a, const ToolCall& b) {
    return a.name == b.name && a.arguments == b.arguments;
  }
};

inline bool is_primitive(const nlohmann::json& v) {
  return v.is_null() || v.is_boolean() || v.is_number() || v.is_string();
}

inline nlohmann::json to_json(const ToolCall& c) { return {{"name", c.name}, {"arguments", c.arguments}}; }

inline nlohmann::json to_json(const std::vector<ToolCall>& calls) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& c : calls) out.push_back(to_json(c));
  return out;
}

inline nlohmann::json to_json(const ToolSpec& t) {
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [k, p] : t.parameters) params[k] = {{"type", p.type}, {"description", p.description}};
  return {{"name", t.name}, {"description", t.description}, {"parameters", params}, {"required", t.required}};
}

inline nlohmann::json to_json(const std::vector<ToolSpec>& tools) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : tools) out.push_back(to_json(t));
  return out;
}

/// Compact, key-sorted serialization. Equal calls serialize identically.
inline std::string canonical_string(const ToolCall& c) {
  return to_json(c).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

inline std::string canonical_string(const std::vector<ToolCall>& calls) {
  return to_json(calls).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

inline const ToolSpec* find_tool(const std::vector<ToolSpec>& menu, const std::string& name) {
  for (const auto& t : menu)
    if (t.name == name) return &t;
  return nullptr;
}

}  // namespace toolplay
