#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "toolplay/errors.hpp"
#include "toolplay/rng.hpp"

namespace toolplay {

enum class ContextType { single_turn, multi_turn };

inline std::string_view to_string(ContextType c) {
  return c == ContextType::single_turn ? "single_turn" : "multi_turn";
}

inline ContextType context_type_from_string(std::string_view s) {
  if (s == "single_turn") return ContextType::single_turn;
  if (s == "multi_turn") return ContextType::multi_turn;
  throw ValidationError("unknown context type: " + std::string(s));
}

/// Control tuple that grounds one generator rollout: domain, interaction
/// context, tool-menu size and number of gold calls.
struct TaskSpec {
  std::string domain;
  ContextType context_type = ContextType::single_turn;
  int tool_menu_size = 2;
  int num_gold_calls = 1;

  friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

/// Empty string when the spec satisfies every structural constraint,
/// otherwise a description of the first violation.
inline std::string spec_violation(const TaskSpec& s) {
  if (s.domain.empty()) return "empty domain";
  if (s.tool_menu_size < 1) return "tool_menu_size must be positive";
  if (s.num_gold_calls < 1) return "num_gold_calls must be positive";
  if (s.context_type == ContextType::multi_turn && s.num_gold_calls != 1)
    return "multi_turn specs carry exactly one gold call";
  if (s.num_gold_calls > 1 && (s.tool_menu_size < 3 || s.tool_menu_size > 5))
    return "multi-call specs need a menu of 3..5 tools";
  if (s.num_gold_calls == 1 && (s.tool_menu_size < 2 || s.tool_menu_size > 8))
    return "single-call specs need a menu of 2..8 tools";
  return {};
}

inline bool is_valid(const TaskSpec& s) { return spec_violation(s).empty(); }

inline void to_json(nlohmann::json& j, const TaskSpec& s) {
  j = nlohmann::json{{"domain", s.domain},
                     {"context_type", std::string(to_string(s.context_type))},
                     {"tool_menu_size", s.tool_menu_size},
                     {"num_gold_calls", s.num_gold_calls}};
}

inline void from_json(const nlohmann::json& j, TaskSpec& s) {
  try {
    s.domain = j.at("domain").get<std::string>();
    s.context_type = context_type_from_string(j.at("context_type").get<std::string>());
    s.tool_menu_size = j.at("tool_menu_size").get<int>();
    s.num_gold_calls = j.at("num_gold_calls").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed task spec: ") + e.what());
  }
}

// Uniform prior over 32 functional and agentic domains.
inline std::vector<std::pair<std::string, double>> default_domain_weights() {
  static const char* const kDomains[] = {
      "finance",         "healthcare",     "productivity",      "retail_ecommerce",
      "scheduling",      "database",       "cloud_infrastructure", "system",
      "programming",     "geolocation",    "logistics",         "communication",
      "iot",             "cybersecurity",  "insurance",         "legal",
      "news",            "weather",        "sports",            "entertainment",
      "education",       "real_estate",    "food_ordering",     "translation",
      "utilities",       "government",     "memory_management", "web_search",
      "social_media",    "math",           "vehicle_control",   "travel"};
  std::vector<std::pair<std::string, double>> out;
  for (const char* d : kDomains) out.emplace_back(d, 0.03125);
  return out;
}

/// User-defined sampling distribution over task specs. Domain weights are
/// unnormalized preferences, not probabilities.
struct SpecDistribution {
  std::vector<std::pair<std::string, double>> domain_weights = default_domain_weights();
  double p_multi_turn = 0.1;
  double p_two_calls = 0.2;
  double menu_bucket_split = 0.5;  // P(small menu 2..4) when n = 1

  void validate() const {
    auto prob = [](double p, const char* name) {
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0,1]");
    };
    prob(p_multi_turn, "p_multi_turn");
    prob(p_two_calls, "p_two_calls");
    prob(menu_bucket_split, "menu_bucket_split");
    bool any_positive = false;
    for (const auto& [name, w] : domain_weights) {
      if (name.empty()) throw ConfigError("empty domain label");
      if (!std::isfinite(w) || w < 0.0) throw ConfigError("domain weight for '" + name + "' must be finite and >= 0");
      any_positive = any_positive || w > 0.0;
    }
    if (!any_positive) throw ConfigError("at least one domain weight must be positive");
  }

  double total_weight() const {
    double t = 0.0;
    for (const auto& dw : domain_weights) t += dw.second;
    return t;
  }
};

inline SpecDistribution spec_distribution_from_json(const nlohmann::json& j) {
  SpecDistribution d;
  try {
    if (j.contains("domain_weights")) {
      d.domain_weights.clear();
      for (const auto& [k, v] : j.at("domain_weights").items()) d.domain_weights.emplace_back(k, v.get<double>());
    }
    d.p_multi_turn = j.value("p_multi_turn", d.p_multi_turn);
    d.p_two_calls = j.value("p_two_calls", d.p_two_calls);
    d.menu_bucket_split = j.value("menu_bucket_split", d.menu_bucket_split);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed taskspec config: ") + e.what());
  }
  d.validate();
  return d;
}

inline nlohmann::json to_json(const SpecDistribution& d) {
  nlohmann::json w = nlohmann::json::object();
  for (const auto& [k, v] : d.domain_weights) w[k] = v;
  return {{"domain_weights", w},
          {"p_multi_turn", d.p_multi_turn},
          {"p_two_calls", d.p_two_calls},
          {"menu_bucket_split", d.menu_bucket_split}};
}

/// Draws one spec using `rng`. Every returned spec satisfies spec_violation().
inline TaskSpec sample_spec(const SpecDistribution& dist, Rng& rng) {
  const double total = dist.total_weight();
  if (!(total > 0.0)) throw ConfigError("at least one domain weight must be positive");

  TaskSpec s;
  const double target = rng.uniform() * total;
  double acc = 0.0;
  for (const auto& [name, w] : dist.domain_weights) {
    if (w <= 0.0) continue;
    s.domain = name;  // last positive weight absorbs rounding at the top end
    acc += w;
    if (target < acc) break;
  }

  s.context_type = rng.bernoulli(dist.p_multi_turn) ? ContextType::multi_turn : ContextType::single_turn;
  s.num_gold_calls = 1;
  if (s.context_type == ContextType::single_turn && rng.bernoulli(dist.p_two_calls)) s.num_gold_calls = 2;

  if (s.num_gold_calls > 1) {
    s.tool_menu_size = static_cast<int>(rng.between(3, 5));
  } else if (rng.bernoulli(dist.menu_bucket_split)) {
    s.tool_menu_size = static_cast<int>(rng.between(2, 4));
  } else {
    s.tool_menu_size = static_cast<int>(rng.between(5, 8));
  }
  return s;
}

inline TaskSpec sample_spec(const SpecDistribution& dist, std::uint64_t seed) {
  dist.validate();
  Rng rng(mix64(seed));
  return sample_spec(dist, rng);
}

/// Draw `index` of the stream rooted at `master_seed`; independent of batch size.
inline TaskSpec sample_spec_at(const SpecDistribution& dist, std::uint64_t master_seed, std::uint64_t index) {
  Rng rng = Rng::stream(master_seed, index);
  return sample_spec(dist, rng);
}

inline std::vector<TaskSpec> sample_specs(const SpecDistribution& dist, std::uint64_t master_seed,
                                          std::size_t count, std::uint64_t first_index = 0) {
  dist.validate();
  std::vector<TaskSpec> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sample_spec_at(dist, master_seed, first_index + i));
  return out;
}

}  // namespace toolplay
