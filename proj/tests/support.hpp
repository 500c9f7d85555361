#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "toolplay/tool.hpp"

namespace support {

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& bytes) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

inline std::filesystem::path assets() { return TOOLPLAY_ASSETS; }

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("toolplay_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline toolplay::ToolCall call(const std::string& name, nlohmann::json args = nlohmann::json::object()) {
  return toolplay::ToolCall{name, std::move(args)};
}

inline std::string answer(const std::string& body) { return "<tool_call_answer>" + body + "</tool_call_answer>"; }

}  // namespace support
