#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "toolplay/gateway.hpp"
#include "toolplay/prompts.hpp"
#include "toolplay/rng.hpp"
#include "toolplay/taskspec.hpp"
#include "toolplay/tool.hpp"

// Synthetic task worlds for scripted end-to-end runs: generator completions
// plus matching solver/judge transcripts with a controlled pass@K profile.

namespace toolplay::synthetic {

struct WorldTask {
  TaskSpec spec;
  std::string question;
  std::vector<ToolSpec> tools;
  std::vector<ToolCall> gold;
  std::string completion;  // generator completion
  int successes = 0;       // solver matches among the K probe transcripts
  enum class Kind { normal, duplicate, malformed, placeholder } kind = Kind::normal;
};

struct World {
  std::vector<WorldTask> tasks;
  std::shared_ptr<ScriptedBackend> generator;
  std::shared_ptr<ScriptedBackend> solver;
};

namespace detail {

inline const std::array<const char*, 12> kVerbs = {"Book",   "Find",  "Get",    "Create", "Update", "Cancel",
                                                   "Search", "Check", "Reserve", "List",  "Send",   "Convert"};
inline const std::array<const char*, 12> kNouns = {"Flight", "Hotel",   "Weather", "Invoice", "Order",  "Ticket",
                                                   "Meeting", "Account", "Route",   "Report",  "Message", "Payment"};
inline const std::array<const char*, 16> kCities = {"Paris",  "Tokyo",  "Lisbon", "Denver", "Cairo",  "Oslo",
                                                    "Lima",   "Austin", "Dublin", "Madrid", "Nairobi", "Seoul",
                                                    "Zurich", "Hanoi",  "Quito",  "Perth"};
inline const std::array<const char*, 8> kKeys = {"city", "date", "count", "name", "category", "priority", "limit",
                                                 "currency"};

inline nlohmann::json value_for(const std::string& key, Rng& rng) {
  if (key == "count" || key == "limit" || key == "priority") return static_cast<int>(rng.between(2, 99));
  if (key == "date") return "2025-0" + std::to_string(rng.between(1, 9)) + "-1" + std::to_string(rng.between(0, 9));
  if (key == "currency") return std::string(rng.bernoulli(0.5) ? "EUR" : "USD");
  if (key == "name") return std::string(kNouns[rng.between(0, 11)]) + "-" + std::to_string(rng.between(100, 999));
  if (key == "category") return std::string(rng.bernoulli(0.5) ? "economy" : "premium");
  return std::string(kCities[rng.between(0, 15)]);
}

inline std::string value_text(const nlohmann::json& v) {
  return v.is_string() ? v.get<std::string>() : v.dump();
}

inline std::string wrap(const std::string& tag, const std::string& body) {
  return "<" + tag + ">\n" + body + "\n</" + tag + ">";
}

}  // namespace detail

/// Generator completion for a task in the four-block format.
inline std::string render_completion(const std::string& question, const std::vector<ToolSpec>& tools,
                                     const std::vector<ToolCall>& gold) {
  return detail::wrap("think", "Pick tools that fit the request and fill arguments from the question.") + "\n" +
         detail::wrap("question", question) + "\n" + detail::wrap("available_tools", to_json(tools).dump(2)) + "\n" +
         detail::wrap("tool_call_answer", to_json(gold).dump(2));
}

inline std::string solver_answer(const std::vector<ToolCall>& calls) {
  return detail::wrap("tool_call_answer", to_json(calls).dump());
}

/// Builds one task for `spec` from the seeded stream slot `index`.
inline WorldTask make_task(const TaskSpec& spec, std::uint64_t seed, std::uint64_t index) {
  Rng rng = Rng::stream(seed, index);
  WorldTask t;
  t.spec = spec;
  const std::size_t m = static_cast<std::size_t>(spec.tool_menu_size);
  const std::size_t verb0 = rng.between(0, 11), noun0 = rng.between(0, 11);
  for (std::size_t k = 0; k < m; ++k) {
    ToolSpec tool;
    tool.name = std::string(detail::kVerbs[(verb0 + k) % 12]) + detail::kNouns[(noun0 + 5 * k) % 12];
    tool.description = "Handles " + spec.domain + " requests (" + tool.name + ").";
    const std::size_t nkeys = rng.between(1, 3);
    const std::size_t key0 = rng.between(0, 7);
    for (std::size_t a = 0; a < nkeys; ++a) {
      const std::string key = detail::kKeys[(key0 + 3 * a) % 8];
      const bool numeric = key == "count" || key == "limit" || key == "priority";
      tool.parameters[key] = ParamSpec{numeric ? "integer" : "string", "The " + key + "."};
      if (a == 0 || rng.bernoulli(0.5)) tool.required.push_back(key);
    }
    t.tools.push_back(std::move(tool));
  }
  std::string q = "In the " + spec.domain + " context, please";
  for (int c = 0; c < spec.num_gold_calls; ++c) {
    const ToolSpec& tool = t.tools[static_cast<std::size_t>(c)];
    ToolCall call;
    call.name = tool.name;
    call.arguments = nlohmann::json::object();
    q += c ? " and then" : "";
    q += " use " + tool.name + " with";
    for (const auto& [key, p] : tool.parameters) {
      const auto v = detail::value_for(key, rng);
      call.arguments[key] = v;
      q += " " + key + " " + detail::value_text(v);
    }
    t.gold.push_back(std::move(call));
  }
  t.question = q + " (request " + std::to_string(index) + ").";
  t.completion = render_completion(t.question, t.tools, t.gold);
  // Difficulty profile: 10% never solved, then roughly thirds hard/medium/easy.
  const std::uint64_t r = rng.between(0, 9);
  t.successes = r == 0 ? 0 : r <= 3 ? 1 : r <= 6 ? static_cast<int>(rng.between(2, 5)) : static_cast<int>(rng.between(6, 8));
  return t;
}

/// K probe transcripts with exactly `successes` strict matches at
/// seeded positions; failures perturb one value or break the format.
inline std::vector<std::string> solver_transcript(const WorldTask& t, int k, std::uint64_t seed, std::uint64_t index) {
  Rng rng = Rng::stream(seed ^ 0x5eedull, index);
  std::vector<int> slots(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) slots[static_cast<std::size_t>(i)] = i < t.successes ? 1 : 0;
  for (std::size_t i = slots.size(); i > 1; --i) std::swap(slots[i - 1], slots[rng.between(0, i - 1)]);
  std::vector<std::string> out;
  for (int i = 0; i < k; ++i) {
    if (slots[static_cast<std::size_t>(i)]) {
      out.push_back(solver_answer(t.gold));
      continue;
    }
    switch (rng.between(0, 2)) {
      case 0: {
        auto wrong = t.gold;
        auto& args = wrong.front().arguments;
        const std::string key = args.begin().key();
        args[key] = args[key].is_string() ? nlohmann::json(args[key].get<std::string>() + "x") : nlohmann::json(-1);
        out.push_back(solver_answer(wrong));
        break;
      }
      case 1: {
        auto extra = t.gold;
        extra.push_back(t.gold.front());
        out.push_back(solver_answer(extra));
        break;
      }
      default: out.push_back("I think the user wants " + t.gold.front().name + " but I am not sure.");
    }
  }
  return out;
}

/// Pool of `count` completions for specs drawn from `dist` with `seed`,
/// registered on a wildcard generator transcript (slot i -> task i) and a
/// hash-keyed solver transcript (probe samples plus judge replies).
inline World make_world(const SpecDistribution& dist, std::uint64_t seed, std::size_t count, int k = 8,
                        const PromptBundle& prompts = PromptBundle::defaults()) {
  World w;
  w.generator = std::make_shared<ScriptedBackend>();
  w.solver = std::make_shared<ScriptedBackend>();
  std::vector<std::string> completions;
  for (std::size_t i = 0; i < count; ++i) {
    const TaskSpec spec = sample_spec_at(dist, seed, i);
    WorldTask t = make_task(spec, seed, i);
    if (i % 17 == 16) {
      t.kind = WorldTask::Kind::malformed;
      t.completion = "<think>x</think><question>" + t.question + "</question><available_tools>[{'name': 'A',,]" +
                     "</available_tools><tool_call_answer>[]</tool_call_answer>";
    } else if (i % 23 == 22) {
      t.kind = WorldTask::Kind::placeholder;
      t.completion = render_completion(t.question, t.tools, t.gold);
      const auto pos = t.completion.rfind("<tool_call_answer>");
      t.completion = t.completion.substr(0, pos) + "<tool_call_answer>\n[...]\n</tool_call_answer>";
    } else if (i % 10 == 9 && !w.tasks.empty()) {
      // Same task as the previous slot up to letter case.
      const WorldTask& prev = w.tasks.back();
      t = prev;
      t.kind = WorldTask::Kind::duplicate;
      t.spec = spec;
      for (char& c : t.question) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      t.completion = render_completion(t.question, t.tools, t.gold);
    }
    completions.push_back(t.completion);
    if (t.kind == WorldTask::Kind::normal) {
      w.solver->add(render_solver_prompt(t.question, t.tools, prompts), solver_transcript(t, k, seed, i));
      w.solver->add(render_judge_prompt(t.question, t.tools, t.gold, prompts), {i % 3 ? "5" : "Score: 4"});
    } else if (t.kind == WorldTask::Kind::duplicate) {
      // The duplicate's question differs in case, so its prompts differ too.
      w.solver->add(render_solver_prompt(t.question, t.tools, prompts), solver_transcript(t, k, seed, i));
      w.solver->add(render_judge_prompt(t.question, t.tools, t.gold, prompts), {"3"});
    }
    w.tasks.push_back(std::move(t));
  }
  w.generator->set_default(std::move(completions));
  return w;
}

}  // namespace toolplay::synthetic
