#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "toolplay/errors.hpp"
#include "toolplay/parse.hpp"
#include "toolplay/tool.hpp"
#include "toolplay/values.hpp"

namespace toolplay {

struct SolverFormatWeights {
  double lambda_tag = 0.3;
  double lambda_parse = 0.3;
  double lambda_norm = 0.4;

  void validate() const {
    if (lambda_tag < 0 || lambda_parse < 0 || lambda_norm < 0)
      throw ConfigError("solver format weights must be non-negative");
  }
};

struct AccuracyWeights {
  double lambda_name = 0.2;
  double lambda_key = 0.3;
  double lambda_val = 0.5;
  double alpha = 0.25;

  void validate() const {
    if (lambda_name < 0 || lambda_key < 0 || lambda_val < 0 || alpha < 0)
      throw ConfigError("accuracy weights must be non-negative");
  }
};

struct PairScore {
  double s_name = 0.0;
  double s_key = 0.0;
  double s_val = 0.0;
  double score = 0.0;
};

struct GoldMatch {
  std::optional<std::size_t> pred_index;
  PairScore pair;
};

struct MatchReport {
  std::vector<GoldMatch> matches;  // one per gold call, in gold order
  double base_accuracy = 0.0;
  double penalty_factor = 1.0;
  double r_acc = 0.0;
};

/// Placeholder answers earn nothing, tag credit included.
inline double solver_format_reward(const ParseOutcome& outcome, const SolverFormatWeights& w = {}) {
  if (outcome.flags.placeholder) return 0.0;
  return w.lambda_tag * (outcome.flags.tags_ok ? 1.0 : 0.0) + w.lambda_parse * (outcome.flags.gold_json_ok ? 1.0 : 0.0) +
         w.lambda_norm * (outcome.flags.normalized_ok ? 1.0 : 0.0);
}

namespace detail {

inline std::set<std::string> key_set(const nlohmann::json& args) {
  std::set<std::string> out;
  for (const auto& [k, v] : args.items()) out.insert(k);
  return out;
}

}  // namespace detail

inline PairScore pair_score(const ToolCall& pred, const ToolCall& gold, const AccuracyWeights& w = {}) {
  PairScore p;
  p.s_name = pred.name == gold.name ? 1.0 : 0.0;

  const auto pk = detail::key_set(pred.arguments);
  const auto gk = detail::key_set(gold.arguments);
  std::size_t common = 0, agree = 0;
  for (const auto& k : gk) {
    if (!pk.contains(k)) continue;
    ++common;
    if (values_equal(pred.arguments.at(k), gold.arguments.at(k))) ++agree;
  }
  if (pk.empty() && gk.empty())
    p.s_key = 1.0;
  else
    p.s_key = 2.0 * static_cast<double>(common) / static_cast<double>(pk.size() + gk.size());
  p.s_val = common == 0 ? 1.0 : static_cast<double>(agree) / static_cast<double>(common);

  p.score = w.lambda_name * p.s_name + w.lambda_key * p.s_key + w.lambda_val * p.s_val;
  return p;
}

/// Greedy matching in gold order: each gold call takes the highest-scoring
/// unused prediction (lowest index on ties).
inline MatchReport accuracy_reward(const std::vector<ToolCall>& preds, const std::vector<ToolCall>& golds,
                                   const AccuracyWeights& w = {}) {
  if (golds.empty()) throw ValidationError("accuracy_reward needs at least one gold call");
  MatchReport r;
  r.matches.resize(golds.size());
  if (preds.empty()) return r;

  std::vector<bool> used(preds.size(), false);
  double sum = 0.0;
  for (std::size_t g = 0; g < golds.size(); ++g) {
    std::optional<std::size_t> best;
    PairScore best_pair;
    for (std::size_t p = 0; p < preds.size(); ++p) {
      if (used[p]) continue;
      PairScore s = pair_score(preds[p], golds[g], w);
      if (!best || s.score > best_pair.score) {
        best = p;
        best_pair = s;
      }
    }
    if (!best) continue;
    used[*best] = true;
    r.matches[g] = GoldMatch{best, best_pair};
    sum += best_pair.score;
  }
  r.base_accuracy = sum / static_cast<double>(golds.size());
  const std::size_t extra = preds.size() > golds.size() ? preds.size() - golds.size() : 0;
  r.penalty_factor = 1.0 / (1.0 + w.alpha * static_cast<double>(extra));
  r.r_acc = r.base_accuracy * r.penalty_factor;
  return r;
}

inline bool calls_equal(const ToolCall& a, const ToolCall& b) {
  if (a.name != b.name) return false;
  if (a.arguments.size() != b.arguments.size()) return false;
  for (const auto& [k, v] : a.arguments.items()) {
    auto it = b.arguments.find(k);
    if (it == b.arguments.end() || !values_equal(v, *it)) return false;
  }
  return true;
}

/// Strict oracle: prediction and gold lists are equal as multisets of calls.
inline bool gold_value_oracle(const std::vector<ToolCall>& preds, const std::vector<ToolCall>& golds) {
  if (preds.size() != golds.size()) return false;
  const std::size_t n = golds.size();
  // Bipartite perfect matching via augmenting paths; lists are short.
  std::vector<std::vector<bool>> eq(n, std::vector<bool>(n));
  for (std::size_t g = 0; g < n; ++g)
    for (std::size_t p = 0; p < n; ++p) eq[g][p] = calls_equal(preds[p], golds[g]);
  std::vector<int> owner(n, -1);
  for (std::size_t g = 0; g < n; ++g) {
    std::vector<bool> seen(n, false);
    std::function<bool(std::size_t)> augment = [&](std::size_t gi) {
      for (std::size_t p = 0; p < n; ++p) {
        if (!eq[gi][p] || seen[p]) continue;
        seen[p] = true;
        if (owner[p] < 0 || augment(static_cast<std::size_t>(owner[p]))) {
          owner[p] = static_cast<int>(gi);
          return true;
        }
      }
      return false;
    };
    if (!augment(g)) return false;
  }
  return true;
}

struct SolverRewardBreakdown {
  double fmt = 0.0;
  double acc = 0.0;
  double total = 0.0;
  std::optional<MatchReport> match;
  bool exact = false;
};

/// Full solver reward: r_fmt + r_acc; placeholder answers score zero.
inline SolverRewardBreakdown solver_breakdown(const ParseOutcome& outcome, const std::vector<ToolCall>& golds,
                                              const SolverFormatWeights& fw = {}, const AccuracyWeights& aw = {}) {
  SolverRewardBreakdown b;
  if (outcome.flags.placeholder) return b;
  b.fmt = solver_format_reward(outcome, fw);
  const std::vector<ToolCall> none;
  const auto& preds = outcome.calls ? *outcome.calls : none;
  b.match = accuracy_reward(preds, golds, aw);
  b.acc = b.match->r_acc;
  b.exact = outcome.calls.has_value() && gold_value_oracle(preds, golds);
  b.total = b.fmt + b.acc;
  return b;
}

inline nlohmann::json to_json(const MatchReport& m) {
  nlohmann::json matches = nlohmann::json::array();
  for (const auto& g : m.matches) {
    matches.push_back({{"pred_index", g.pred_index ? nlohmann::json(*g.pred_index) : nlohmann::json(nullptr)},
                       {"s_name", g.pair.s_name},
                       {"s_key", g.pair.s_key},
                       {"s_val", g.pair.s_val},
                       {"score", g.pair.score}});
  }
  return {{"matches", matches},
          {"base_accuracy", m.base_accuracy},
          {"penalty_factor", m.penalty_factor},
          {"r_acc", m.r_acc}};
}

inline nlohmann::json to_json(const SolverRewardBreakdown& b) {
  nlohmann::json j = {{"fmt", b.fmt}, {"acc", b.acc}, {"total", b.total}, {"exact_match", b.exact}};
  j["match"] = b.match ? to_json(*b.match) : nlohmann::json(nullptr);
  return j;
}

}  // namespace toolplay
