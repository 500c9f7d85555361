#pragma once

#include <atomic>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "toolplay/config.hpp"
#include "toolplay/errors.hpp"
#include "toolplay/gateway.hpp"
#include "toolplay/genreward.hpp"
#include "toolplay/parallel.hpp"
#include "toolplay/parse.hpp"
#include "toolplay/solreward.hpp"

namespace toolplay {

enum class Role { generator, solver };

inline std::string_view to_string(Role r) { return r == Role::generator ? "generator" : "solver"; }

inline Role role_from_string(std::string_view s) {
  if (s == "generator") return Role::generator;
  if (s == "solver") return Role::solver;
  throw RequestError("unknown role '" + std::string(s) + "'");
}

/// Per-item result. `ok` is false when scoring itself failed (the item then
/// carries a zero total); a garbage completion that scores zero is still ok.
struct ItemResult {
  bool ok = true;
  double total = 0.0;
  nlohmann::json breakdown;
  std::vector<std::string> diagnostics;
};

inline nlohmann::json to_json(const ItemResult& r, std::size_t index) {
  return {{"index", index},
          {"ok", r.ok},
          {"total", r.total},
          {"breakdown", r.breakdown},
          {"diagnostics", r.diagnostics}};
}

/// Stateless batch scorer; the backends are only read from.
class RewardService {
 public:
  RewardService(RewardConfig rewards, GatewayConfig gateway, BackendPtr solver, BackendPtr judge,
                PromptBundle prompts = PromptBundle::defaults(), int threads = 4)
      : rewards_(std::move(rewards)),
        gateway_(std::move(gateway)),
        solver_(std::move(solver)),
        judge_(std::move(judge)),
        prompts_(std::move(prompts)),
        threads_(threads) {
    rewards_.validate();
  }

  const RewardConfig& rewards() const { return rewards_; }

  ItemResult score_generator(const std::string& completion, const RewardConfig& rc) const {
    ItemResult r;
    ParseOutcome o = parse_generator_completion(completion);
    r.diagnostics = o.diagnostics;
    std::optional<double> p_succ;
    std::optional<int> judge_score;
    nlohmann::json extra = {{"probe_successes", nullptr}, {"judge_parse_failed", nullptr}};
    if (o.gold && o.tools && !o.flags.placeholder) {
      if (!solver_) throw BackendError("generator scoring needs a solver backend");
      ProbeParams pp = gateway_.probe;
      pp.k = rc.band.k_samples;
      ProbeResult pr = probe_solver(*solver_, o.question, *o.tools, *o.gold, pp, prompts_);
      p_succ = pr.p_succ;
      extra["probe_successes"] = pr.successes;
      JudgeResult jr = judge_semantics(*(judge_ ? judge_ : solver_), o.question, *o.tools, *o.gold, gateway_.judge,
                                       prompts_);
      judge_score = jr.score;
      extra["judge_parse_failed"] = jr.parse_failed;
      if (jr.parse_failed) r.diagnostics.push_back("judge reply unparseable after retry; floor score 1");
    }
    GenRewardBreakdown b = generator_breakdown(o, p_succ, judge_score, rc.validity, rc.band);
    r.breakdown = to_json(b);
    r.breakdown.update(extra);
    r.total = b.total_raw;
    return r;
  }

  ItemResult score_solver(const std::string& completion, const std::vector<ToolCall>& gold,
                          const RewardConfig& rc) const {
    ItemResult r;
    ParseOutcome o = parse_solver_completion(completion);
    r.diagnostics = o.diagnostics;
    SolverRewardBreakdown b = solver_breakdown(o, gold, rc.solver_format, rc.accuracy);
    r.breakdown = to_json(b);
    r.total = b.total;
    return r;
  }

  /// One item of a request; exceptions become a zero-total failed item.
  ItemResult score_item(Role role, const nlohmann::json& item, const RewardConfig& rc) const {
    try {
      if (!item.contains("completion") || !item["completion"].is_string())
        throw ValidationError("item has no string 'completion'");
      const std::string& completion = item["completion"].get_ref<const std::string&>();
      if (role == Role::generator) return score_generator(completion, rc);
      const nlohmann::json ctx = item.value("context", nlohmann::json::object());
      if (!ctx.is_object() || !ctx.contains("gold_calls")) throw ValidationError("solver item needs context.gold_calls");
      auto gold = calls_from_json(ctx["gold_calls"]);
      if (gold.empty()) throw ValidationError("context.gold_calls is empty");
      return score_solver(completion, gold, rc);
    } catch (const std::exception& e) {
      ItemResult failed;
      failed.ok = false;
      failed.total = 0.0;
      failed.breakdown = zero_breakdown(role);
      failed.diagnostics.push_back(e.what());
      return failed;
    }
  }

  /// Validates the envelope (RequestError on malformed input) and scores all
  /// items, order-preserving.
  nlohmann::json score_batch(Role role, const nlohmann::json& request) const {
    if (!request.is_object()) throw RequestError("request body must be an object");
    if (auto it = request.find("role"); it != request.end()) {
      if (!it->is_string()) throw RequestError("role must be a string");
      if (role_from_string(it->get<std::string>()) != role) throw RequestError("role does not match endpoint");
    }
    auto items = request.find("items");
    if (items == request.end() || !items->is_array() || items->empty())
      throw RequestError("items must be a non-empty list");
    for (const auto& it : *items)
      if (!it.is_object()) throw RequestError("every item must be an object");

    RewardConfig rc = rewards_;
    if (auto ov = request.find("config"); ov != request.end() && !ov->is_null()) {
      if (!ov->is_object()) throw RequestError("config overrides must be an object");
      try {
        merge_reward_json(rc, ov->contains("reward") ? (*ov)["reward"] : *ov);
      } catch (const std::exception& e) {
        throw RequestError(std::string("bad config overrides: ") + e.what());
      }
    }

    std::vector<ItemResult> results(items->size());
    parallel_for(items->size(), threads_, [&](std::size_t i) { results[i] = score_item(role, (*items)[i], rc); });

    nlohmann::json out = {{"role", std::string(to_string(role))}, {"results", nlohmann::json::array()}};
    for (std::size_t i = 0; i < results.size(); ++i) out["results"].push_back(to_json(results[i], i));
    return out;
  }

  static nlohmann::json zero_breakdown(Role role) {
    if (role == Role::generator) {
      nlohmann::json j = to_json(GenRewardBreakdown{});
      j["probe_successes"] = nullptr;
      j["judge_parse_failed"] = nullptr;
      return j;
    }
    return to_json(SolverRewardBreakdown{});
  }

 private:
  RewardConfig rewards_;
  GatewayConfig gateway_;
  BackendPtr solver_;
  BackendPtr judge_;
  PromptBundle prompts_;
  int threads_;
};

}  // namespace toolplay
