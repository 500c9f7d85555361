#pragma once

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "toolplay/errors.hpp"
#include "toolplay/parse.hpp"
#include "toolplay/values.hpp"

namespace toolplay {

struct ValidityWeights {
  double lambda_menu = 0.4;
  double lambda_gold = 0.4;
  double lambda_value = 0.2;

  void validate() const {
    if (lambda_menu < 0 || lambda_gold < 0 || lambda_value < 0)
      throw ConfigError("validity weights must be non-negative");
  }
};

/// Target success band for the solver probe plus the Gaussian falloff width
/// and the number of probe samples.
struct DifficultyBand {
  double p_low = 0.25;
  double p_high = 0.75;
  double sigma = 0.12;
  int k_samples = 8;

  void validate() const {
    if (!(p_low > 0.0 && p_low <= p_high && p_high < 1.0)) throw ConfigError("band needs 0 < p_low <= p_high < 1");
    if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
    if (k_samples < 1) throw ConfigError("k_samples must be >= 1");
  }
};

struct GenRewardBreakdown {
  int fmt = 0;
  double valid = 0.0;
  double diff = 0.0;
  double sem = 0.0;
  double curr = 0.0;
  double total_raw = 0.0;
  double total_normalized = 0.0;
  double p_succ = 0.0;
};

/// Tags + tool-menu JSON + gold-call JSON, each 0 or 1.
inline int format_reward(const ParseOutcome& outcome) {
  return static_cast<int>(outcome.flags.tags_ok) + static_cast<int>(outcome.flags.tools_json_ok) +
         static_cast<int>(outcome.flags.gold_json_ok);
}

struct ValidityResult {
  bool menu_ok = false;      // every gold tool exists in the menu
  bool required_ok = false;  // required params of each gold tool are present
  bool values_ok = false;    // non-trivial argument values appear in the question
  double score = 0.0;
};

/// Internal consistency of menu, gold calls and question. Multi-call answers
/// must pass each check for every call.
inline ValidityResult validity_reward(const std::string& question, const std::vector<ToolSpec>* menu,
                                      const std::vector<ToolCall>& gold, const ValidityWeights& w = {}) {
  ValidityResult r;
  if (gold.empty()) return r;

  if (menu) {
    r.menu_ok = true;
    r.required_ok = true;
    for (const auto& call : gold) {
      const ToolSpec* tool = find_tool(*menu, call.name);
      if (!tool) {
        r.menu_ok = false;
        continue;  // unknown tool: no required set to check
      }
      for (const auto& req : tool->required)
        if (!call.arguments.contains(req)) r.required_ok = false;
    }
  }

  r.values_ok = true;
  for (const auto& call : gold)
    for (const auto& [k, v] : call.arguments.items())
      if (!value_grounded(v, question)) r.values_ok = false;

  r.score = w.lambda_menu * (r.menu_ok ? 1.0 : 0.0) + w.lambda_gold * (r.required_ok ? 1.0 : 0.0) +
            w.lambda_value * (r.values_ok ? 1.0 : 0.0);
  return r;
}

inline ValidityResult validity_reward(const GeneratedTask& task, const ValidityWeights& w = {}) {
  return validity_reward(task.question, &task.tools, task.gold_calls, w);
}

/// Band-pass shaping of the solver success rate: 1 on [p_low, p_high],
/// Gaussian decay outside, hard zero when fewer than one probe in K matched.
inline double difficulty_reward(double p_succ, const DifficultyBand& band = {}) {
  if (p_succ < 1.0 / static_cast<double>(band.k_samples)) return 0.0;
  if (p_succ >= band.p_low && p_succ <= band.p_high) return 1.0;
  const double edge = p_succ < band.p_low ? band.p_low : band.p_high;
  const double d = p_succ - edge;
  return std::exp(-(d * d) / (2.0 * band.sigma * band.sigma));
}

inline double semantic_reward(int judge_score) {
  if (judge_score < 1 || judge_score > 5) throw ValidationError("judge score must be in 1..5");
  return (judge_score - 1) / 4.0;
}

inline double curriculum_reward(double diff, double sem) { return diff + sem; }

/// Assembles the full generator breakdown. `p_succ` and `judge_score` come
/// from the gateway (solver probe and judge); pass them as nullopt when the
/// completion never produced a task to probe.
inline GenRewardBreakdown generator_breakdown(const ParseOutcome& outcome, std::optional<double> p_succ,
                                              std::optional<int> judge_score, const ValidityWeights& vw = {},
                                              const DifficultyBand& band = {}) {
  GenRewardBreakdown b;
  b.fmt = format_reward(outcome);
  if (outcome.gold) {
    const std::vector<ToolSpec>* menu = outcome.tools ? &*outcome.tools : nullptr;
    b.valid = validity_reward(outcome.question, menu, *outcome.gold, vw).score;
  }
  if (p_succ) {
    b.p_succ = *p_succ;
    b.diff = difficulty_reward(*p_succ, band);
  }
  if (judge_score) b.sem = semantic_reward(*judge_score);
  b.curr = curriculum_reward(b.diff, b.sem);
  b.total_raw = b.fmt + b.valid + b.curr;
  b.total_normalized = (b.fmt / 3.0 + b.valid + b.curr / 2.0) / 3.0;
  return b;
}

inline nlohmann::json to_json(const GenRewardBreakdown& b) {
  return {{"fmt", b.fmt},   {"valid", b.valid},         {"diff", b.diff},
          {"sem", b.sem},   {"curr", b.curr},           {"total_raw", b.total_raw},
          {"p_succ", b.p_succ}, {"total_normalized", b.total_normalized}};
}

}  // namespace toolplay
