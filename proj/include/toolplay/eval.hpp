#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "toolplay/errors.hpp"
#include "toolplay/gateway.hpp"
#include "toolplay/parallel.hpp"
#include "toolplay/parse.hpp"
#include "toolplay/solreward.hpp"

namespace toolplay {

struct BenchmarkItem {
  std::string id;
  std::string question;
  std::vector<ToolSpec> tools;
  std::vector<ToolCall> gold_calls;
  nlohmann::json history;  // optional dialogue turns, null when absent
};

inline BenchmarkItem benchmark_item_from_json(const nlohmann::json& j) {
  BenchmarkItem b;
  const auto& id = j.at("id");
  b.id = id.is_string() ? id.get<std::string>() : id.dump();
  b.question = j.at("question").get<std::string>();
  b.tools = tools_from_json(j.at("tools"));
  b.gold_calls = calls_from_json(j.at("gold_calls"));
  if (b.gold_calls.empty()) throw ValidationError("gold_calls must be non-empty");
  b.history = j.value("history", nlohmann::json());
  return b;
}

inline nlohmann::json to_json(const BenchmarkItem& b) {
  nlohmann::json j = {{"id", b.id}, {"question", b.question}, {"tools", to_json(b.tools)},
                      {"gold_calls", to_json(b.gold_calls)}};
  if (!b.history.is_null()) j["history"] = b.history;
  return j;
}

enum class ErrorClass { format, structural, semantic };

inline std::string_view to_string(ErrorClass c) {
  switch (c) {
    case ErrorClass::format: return "format";
    case ErrorClass::structural: return "structural";
    case ErrorClass::semantic: return "semantic";
  }
  return "format";
}

struct ErrorLabel {
  ErrorClass label = ErrorClass::format;
  std::string sub_cause;
};

struct Verdict {
  bool correct = false;
  std::optional<ErrorLabel> error;
  std::vector<std::string> diagnostics;
};

namespace detail {

inline bool value_missing(const nlohmann::json& v) {
  return v.is_null() || (v.is_string() && trim(v.get_ref<const std::string&>()).empty());
}

}  // namespace detail

/// Precedence: format > structural (call count, tool name, extra keys,
/// missing keys) > semantic (missing gold value, wrong value). Calls are
/// paired with the greedy accuracy matcher.
inline ErrorLabel classify_calls(const std::optional<std::vector<ToolCall>>& preds, const std::vector<ToolCall>& gold) {
  if (!preds) return {ErrorClass::format, "unparseable"};
  if (preds->size() != gold.size()) return {ErrorClass::structural, "incorrect_call_count"};

  std::multiset<std::string> pn, gn;
  for (const auto& c : *preds) pn.insert(c.name);
  for (const auto& c : gold) gn.insert(c.name);
  if (pn != gn) return {ErrorClass::structural, "wrong_tool_name"};

  const MatchReport m = accuracy_reward(*preds, gold);
  bool extra = false, missing = false, absent_value = false, wrong_value = false;
  for (std::size_t g = 0; g < gold.size(); ++g) {
    const auto& gc = gold[g];
    const auto& pc = (*preds)[*m.matches[g].pred_index];
    for (const auto& [k, v] : pc.arguments.items())
      if (!gc.arguments.contains(k)) extra = true;
    for (const auto& [k, gv] : gc.arguments.items()) {
      auto it = pc.arguments.find(k);
      if (it == pc.arguments.end()) {
        missing = true;
      } else if (!values_equal(*it, gv)) {
        if (detail::value_missing(*it) && !detail::value_missing(gv))
          absent_value = true;
        else
          wrong_value = true;
      }
    }
  }
  if (extra) return {ErrorClass::structural, "extra_arguments"};
  if (missing) return {ErrorClass::structural, "missing_arguments"};
  if (absent_value) return {ErrorClass::semantic, "missing_gold_value"};
  if (wrong_value) return {ErrorClass::semantic, "wrong_argument_value"};
  return {ErrorClass::semantic, "wrong_argument_value"};
}

inline ErrorLabel classify_error(const std::string& pred_completion, const BenchmarkItem& item) {
  return classify_calls(parse_solver_completion(pred_completion, true).calls, item.gold_calls);
}

/// Parses the prediction (answer block or bare JSON) and applies the strict
/// oracle; incorrect items get a taxonomy label.
inline Verdict ast_match(const std::string& pred_completion, const BenchmarkItem& item) {
  Verdict v;
  ParseOutcome o = parse_solver_completion(pred_completion, true);
  v.diagnostics = o.diagnostics;
  v.correct = o.calls && gold_value_oracle(*o.calls, item.gold_calls);
  if (!v.correct) v.error = classify_calls(o.calls, item.gold_calls);
  return v;
}

struct ItemVerdict {
  std::string id;
  Verdict verdict;
};

struct EvalReport {
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  std::vector<ItemVerdict> verdicts;
  std::map<std::string, std::map<std::string, std::size_t>> histogram;  // label -> sub_cause -> count
};

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& iv : r.verdicts) {
    nlohmann::json e = {{"id", iv.id}, {"correct", iv.verdict.correct}};
    if (iv.verdict.error) {
      e["label"] = std::string(to_string(iv.verdict.error->label));
      e["sub_cause"] = iv.verdict.error->sub_cause;
    }
    items.push_back(std::move(e));
  }
  nlohmann::json hist = nlohmann::json::object();
  for (const char* label : {"format", "structural", "semantic"}) {
    nlohmann::json subs = nlohmann::json::object();
    std::size_t n = 0;
    if (auto it = r.histogram.find(label); it != r.histogram.end())
      for (const auto& [sub, c] : it->second) {
        subs[sub] = c;
        n += c;
      }
    hist[label] = {{"count", n}, {"sub_causes", subs}};
  }
  return {{"total", r.total}, {"correct", r.correct}, {"accuracy", r.accuracy}, {"errors", hist}, {"items", items}};
}

inline EvalReport evaluate_items(const std::vector<BenchmarkItem>& items,
                                 const std::vector<std::string>& completions) {
  if (items.size() != completions.size()) throw ValidationError("one completion per benchmark item required");
  EvalReport r;
  r.total = items.size();
  r.verdicts.resize(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    r.verdicts[i] = {items[i].id, ast_match(completions[i], items[i])};
    if (r.verdicts[i].verdict.correct)
      ++r.correct;
    else
      ++r.histogram[std::string(to_string(r.verdicts[i].verdict.error->label))][r.verdicts[i].verdict.error->sub_cause];
  }
  r.accuracy = r.total ? static_cast<double>(r.correct) / static_cast<double>(r.total) : 0.0;
  return r;
}

namespace detail {

template <class F>
void read_lines(const std::filesystem::path& path, const char* what, F&& per_line) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError(std::string("cannot open ") + what + " file " + path.string());
  std::string line;
  std::vector<std::string> bad;
  std::size_t records = 0;
  for (std::size_t ln = 1; std::getline(in, line); ++ln) {
    if (trim(line).empty()) continue;
    try {
      per_line(nlohmann::json::parse(line));
      ++records;
    } catch (const std::exception& e) {
      bad.push_back(std::to_string(ln) + " (" + e.what() + ")");
    }
  }
  if (!bad.empty()) {
    std::string msg = path.string() + ": malformed " + what + " lines:";
    for (const auto& b : bad) msg += "\n  line " + b;
    throw IngestionError(msg);
  }
  if (records == 0) throw IngestionError(path.string() + ": empty " + what + " file");
}

}  // namespace detail

inline std::vector<BenchmarkItem> read_benchmark_file(const std::filesystem::path& path) {
  std::vector<BenchmarkItem> items;
  std::set<std::string> ids;
  detail::read_lines(path, "benchmark", [&](const nlohmann::json& j) {
    BenchmarkItem b = benchmark_item_from_json(j);
    if (!ids.insert(b.id).second) throw ValidationError("duplicate id " + b.id);
    items.push_back(std::move(b));
  });
  return items;
}

/// {id, completion} lines keyed by id.
inline std::map<std::string, std::string> read_predictions_file(const std::filesystem::path& path) {
  std::map<std::string, std::string> out;
  detail::read_lines(path, "predictions", [&](const nlohmann::json& j) {
    const auto& id = j.at("id");
    out[id.is_string() ? id.get<std::string>() : id.dump()] = j.at("completion").get<std::string>();
  });
  return out;
}

/// Items without a prediction are scored as empty (format) failures.
inline EvalReport evaluate_file(const std::filesystem::path& bench, const std::filesystem::path& preds) {
  const auto items = read_benchmark_file(bench);
  const auto by_id = read_predictions_file(preds);
  std::vector<std::string> completions;
  for (const auto& it : items) {
    auto p = by_id.find(it.id);
    completions.push_back(p == by_id.end() ? std::string() : p->second);
  }
  return evaluate_items(items, completions);
}

/// Queries the solver for each item (greedy decoding at temperature 0).
inline EvalReport evaluate_with_backend(const std::vector<BenchmarkItem>& items, ModelBackend& solver,
                                        const PromptBundle& prompts = PromptBundle::defaults(), int threads = 4,
                                        int max_tokens = 2048) {
  std::vector<std::string> completions(items.size());
  parallel_for(items.size(), threads, [&](std::size_t i) {
    completions[i] =
        solver.complete(render_solver_prompt(items[i].question, items[i].tools, prompts), 1, {0.0, max_tokens, 0})
            .at(0);
  });
  return evaluate_items(items, completions);
}

}  // namespace toolplay
