// Acceptance suite: one PASS/FAIL line per primary criterion; exit status is
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "toolplay/server.hpp"
#include "toolplay/synthetic.hpp"
#include "toolplay/toolplay.hpp"

namespace fs = std::filesystem;
using namespace toolplay;
using nlohmann::json;

namespace {

struct Check {
  std::vector<std::string> failures;
  std::vector<std::string> notes;
  std::size_t cases = 0;

  void expect(bool ok, const std::string& what) {
    ++cases;
    if (!ok && failures.size() < 20) failures.push_back(what);
    if (!ok && failures.size() == 20) failures.push_back("(further failures suppressed)");
  }
  // Float distance in units in the last place.
  static std::int64_t ulps(double a, double b) {
    auto key = [](double x) {
      std::int64_t i;
      std::memcpy(&i, &x, sizeof i);
      return i < 0 ? std::numeric_limits<std::int64_t>::min() - i : i;
    };
    const std::int64_t d = key(a) - key(b);
    return d < 0 ? -d : d;
  }
  void exact(double got, double want, const std::string& what, std::int64_t max_ulps = 0) {
    std::ostringstream ss;
    ss.precision(17);
    ss << what << ": got " << got << ", want " << want << " (" << ulps(got, want) << " ulp)";
    expect(ulps(got, want) <= max_ulps, ss.str());
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream ss;
    ss.precision(17);
    ss << what << ": got " << got << ", want " << want;
    expect(std::fabs(got - want) <= tol, ss.str());
  }
};

ToolCall call(const std::string& name, json args = json::object()) { return ToolCall{name, std::move(args)}; }
std::string answer(const std::string& body) { return "<tool_call_answer>" + body + "</tool_call_answer>"; }

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("toolplay_accept_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// ---------------------------------------------------------------- r_diff

void difficulty_curve(Check& c) {
  const DifficultyBand b;
  c.expect(difficulty_reward(0.5, b) == 1.0, "r(0.5) == 1");
  for (int i = 0; i <= 1000; ++i) {
    const double p = 0.25 + 0.5 * i / 1000.0;
    c.expect(difficulty_reward(p, b) == 1.0, "r(" + std::to_string(p) + ") == 1 inside band");
  }
  c.near(difficulty_reward(1.0, b), std::exp(-0.25 * 0.25 / (2 * 0.12 * 0.12)), 1e-12, "r(1.0)");
  for (int i = 0; i < 1000; ++i) {
    const double p = 0.125 * i / 1000.0;
    c.expect(difficulty_reward(p, b) == 0.0, "r(" + std::to_string(p) + ") == 0 below 1/K");
  }
  c.expect(difficulty_reward(0.125, b) > 0.0, "r(1/K) > 0");
  for (double edge : {0.25, 0.75}) {
    c.near(difficulty_reward(edge - 1e-12, b), 1.0, 1e-9, "continuity below edge " + std::to_string(edge));
    c.near(difficulty_reward(edge + 1e-12, b), 1.0, 1e-9, "continuity above edge " + std::to_string(edge));
  }
  for (double t : {0.05, 0.1, 0.2}) {
    const std::string gated = 0.25 - t < 1.0 / b.k_samples ? " (p_low - t is below the 1/K gate)" : "";
    c.near(difficulty_reward(0.25 - t, b), difficulty_reward(0.75 + t, b), 1e-12,
           "symmetry t=" + std::to_string(t) + gated);
  }
}

// ---------------------------------------------------------------- goldens

const char* kMenu = R"([{"name": "BookFlight", "description": "Book a flight.", "parameters": {"city": {"type": "string"}, "seats": {"type": "integer"}}, "required": ["city"]},
 {"name": "GetWeather", "description": "Weather.", "parameters": {"city": {"type": "string"}}, "required": ["city"]}])";

std::string gen(const std::string& question, const std::string& tools, const std::string& gold, bool think = true) {
  return (think ? "<think>plan</think>\n" : "") + std::string("<question>") + question + "</question>\n<available_tools>" +
         tools + "</available_tools>\n<tool_call_answer>" + gold + "</tool_call_answer>";
}

struct GenGolden {
  std::string name, completion;
  std::optional<double> p;
  std::optional<int> judge;
  int fmt;
  double valid, diff, sem, raw, norm;
};

struct SolGolden {
  std::string name, completion, gold;
  double fmt, acc, total;
};

void reward_goldens(Check& c) {
  // Decimal weights are not dyadic: 0.4 + 0.2 lands one ulp above 0.6.
  const std::int64_t kUlps = 4;
  const std::string q = "Book a flight to Paris for 2 people";
  const std::string g1 = R"([{"name": "BookFlight", "arguments": {"city": "Paris", "seats": 2}}])";
  const double d125 = 0.5812730178734145;  // band-pass at 1/8 and at 7/8
  const double d100 = 0.11416176000968695;
  const std::vector<GenGolden> gens = {
      {"gen all checks, mid band", gen(q, kMenu, g1), 0.5, 5, 3, 1.0, 1.0, 1.0, 6.0, 1.0},
      {"gen p=1/8 judge 3", gen(q, kMenu, g1), 0.125, 3, 3, 1.0, d125, 0.5, 5.081273017873414, 0.8468788363122357},
      {"gen p=0 judge 1", gen(q, kMenu, g1), 0.0, 1, 3, 1.0, 0.0, 0.0, 4.0, 2.0 / 3.0},
      {"gen unknown tool", gen(q, kMenu, R"([{"name": "BookTrain", "arguments": {"city": "Paris"}}])"), 0.25, 4, 3,
       0.6, 1.0, 0.75, 5.35, 0.825},
      {"gen missing required", gen(q, kMenu, R"([{"name": "BookFlight", "arguments": {"seats": 2}}])"), 0.75, 5, 3,
       0.6, 1.0, 1.0, 5.6, (1.0 + 0.6 + 1.0) / 3.0},
      {"gen ungrounded substring", gen(q, kMenu, R"([{"name": "BookFlight", "arguments": {"city": "Par"}}])"), 0.5, 5,
       3, 0.8, 1.0, 1.0, 5.8, (1.0 + 0.8 + 1.0) / 3.0},
      {"gen placeholder gold", gen(q, kMenu, "[...]"), std::nullopt, std::nullopt, 2, 0.0, 0.0, 0.0, 2.0, 2.0 / 9.0},
      {"gen malformed menu", gen(q, "[{'name': 'A',,]", g1), std::nullopt, std::nullopt, 2, 0.2, 0.0, 0.0, 2.2,
       (2.0 / 3.0 + 0.2) / 3.0},
      {"gen missing think", gen(q, kMenu, g1, false), std::nullopt, std::nullopt, 2, 1.0, 0.0, 0.0, 3.0,
       (2.0 / 3.0 + 1.0) / 3.0},
      {"gen empty", "", std::nullopt, std::nullopt, 0, 0.0, 0.0, 0.0, 0.0, 0.0},
      {"gen two calls", gen("Fly to Paris for 2 and check weather in Oslo", kMenu,
                            R"([{"name": "BookFlight", "arguments": {"city": "Paris", "seats": 2}},
                                {"name": "GetWeather", "arguments": {"city": "Oslo"}}])"),
       0.75, 2, 3, 1.0, 1.0, 0.25, 5.25, 0.875},
      {"gen two calls one missing required", gen("Fly to Paris and check the weather", kMenu,
                                                 R"([{"name": "BookFlight", "arguments": {"city": "Paris"}},
                                                     {"name": "GetWeather", "arguments": {}}])"),
       0.5, 5, 3, 0.6, 1.0, 1.0, 5.6, (1.0 + 0.6 + 1.0) / 3.0},
      {"gen p=1 judge 5", gen(q, kMenu, g1), 1.0, 5, 3, 1.0, d100, 1.0, 5.1141617600096865, 0.8523602933349478},
      {"gen p=7/8 judge 5", gen(q, kMenu, g1), 0.875, 5, 3, 1.0, d125, 1.0, 5.581273017873414, 0.9302121696455691},
      {"gen boolean not mentioned", gen(q, kMenu, R"([{"name": "BookFlight", "arguments": {"city": "Paris", "seats": 2, "refundable": true}}])"),
       0.5, 1, 3, 1.0, 1.0, 0.0, 5.0, (1.0 + 1.0 + 0.5) / 3.0},
  };
  for (const auto& g : gens) {
    const auto b = generator_breakdown(parse_generator_completion(g.completion), g.p, g.judge);
    c.expect(b.fmt == g.fmt, g.name + ": fmt " + std::to_string(b.fmt));
    c.exact(b.valid, g.valid, g.name + ": valid", kUlps);
    c.exact(b.diff, g.diff, g.name + ": diff", kUlps);
    c.exact(b.sem, g.sem, g.name + ": sem", kUlps);
    c.exact(b.curr, g.diff + g.sem, g.name + ": curr", kUlps);
    c.exact(b.total_raw, g.raw, g.name + ": total_raw", kUlps);
    c.exact(b.total_normalized, g.norm, g.name + ": total_normalized", kUlps);
  }

  const std::string two = R"([{"name": "BookFlight", "arguments": {"city": "Paris", "seats": 2}},
                              {"name": "GetWeather", "arguments": {"city": "Paris"}}])";
  const std::vector<SolGolden> sols = {
      {"sol exact", answer(g1), g1, 1.0, 1.0, 2.0},
      {"sol no tags", g1, g1, 0.0, 0.0, 0.0},
      {"sol unparseable", answer("BookFlight(city=Paris)"), g1, 0.3, 0.0, 0.3},
      {"sol no name field", answer(R"([{"arguments": {"city": "Paris"}}])"), g1, 0.6, 0.0, 0.6},
      {"sol exact plus extra", answer(R"([{"name": "BookFlight", "arguments": {"city": "Paris", "seats": 2}},
                                          {"name": "GetWeather", "arguments": {"city": "Paris"}}])"),
       g1, 1.0, 0.8, 1.8},
      {"sol wrong name", answer(R"([{"name": "BookHotel", "arguments": {"city": "Paris", "seats": 2}}])"), g1, 1.0,
       0.8, 1.8},
      {"sol one wrong value", answer(R"([{"name": "BookFlight", "arguments": {"city": "Paris", "seats": 3}}])"), g1,
       1.0, 0.75, 1.75},
      {"sol missing key", answer(R"([{"name": "BookFlight", "arguments": {"city": "Paris"}}])"), g1, 1.0, 0.9, 1.9},
      {"sol extra key", answer(R"([{"name": "BookFlight", "arguments": {"city": "Paris", "seats": 2, "cabin": "eco"}}])"),
       g1, 1.0, 0.94, 1.94},
      {"sol numeric string", answer(R"([{"name": "BookFlight", "arguments": {"city": "Paris", "seats": "2"}}])"), g1,
       1.0, 1.0, 2.0},
      {"sol padded string", answer(R"([{"name": "BookFlight", "arguments": {"city": " Paris ", "seats": 2}}])"), g1,
       1.0, 1.0, 2.0},
      {"sol half of two golds", answer(g1), two, 1.0, 0.5, 1.5},
      {"sol two golds reversed", answer(R"([{"name": "GetWeather", "arguments": {"city": "Paris"}},
                                           {"name": "BookFlight", "arguments": {"city": "Paris", "seats": 2}}])"),
       two, 1.0, 1.0, 2.0},
      {"sol two golds two extras", answer(R"([{"name": "BookFlight", "arguments": {"city": "Paris", "seats": 2}},
                                             {"name": "GetWeather", "arguments": {"city": "Paris"}},
                                             {"name": "X"}, {"name": "Y"}])"),
       two, 1.0, 1.0 / 1.5, 1.0 + 1.0 / 1.5},
      {"sol placeholder", answer("[...]"), g1, 0.0, 0.0, 0.0},
      {"sol wrapper form", answer(R"({"function": {"name": "BookFlight", "arguments": "{\"city\": \"Paris\", \"seats\": 2}"}})"),
       g1, 1.0, 1.0, 2.0},
      {"sol empty list", answer("[]"), g1, 0.6, 0.0, 0.6},
      {"sol wrong name and value", answer(R"([{"name": "GetWeather", "arguments": {"city": "Paris", "seats": 3}}])"),
       g1, 1.0, 0.55, 1.55},
      {"sol disjoint keys", answer(R"([{"name": "BookFlight", "arguments": {"date": "x"}}])"), g1, 1.0, 0.7, 1.7},
  };
  for (const auto& s : sols) {
    const auto b = solver_breakdown(parse_solver_completion(s.completion), calls_from_json(json::parse(s.gold)));
    c.exact(b.fmt, s.fmt, s.name + ": fmt", kUlps);
    c.exact(b.acc, s.acc, s.name + ": acc", kUlps);
    c.exact(b.total, s.total, s.name + ": total", kUlps);
  }
  // Dyadic-exact cases: the penalty factor and perfect totals are bit-exact.
  const auto extra = solver_breakdown(parse_solver_completion(sols[4].completion), calls_from_json(json::parse(g1)));
  c.exact(extra.acc, 0.8, "perfect match plus one extra");
  c.exact(extra.match->penalty_factor, 0.8, "penalty factor");
  c.exact(solver_breakdown(parse_solver_completion(sols[0].completion), calls_from_json(json::parse(g1))).total, 2.0,
          "perfect solver total");
  c.exact(generator_breakdown(parse_generator_completion(gens[0].completion), 0.5, 5).total_raw, 6.0,
          "perfect generator total");
  c.notes.push_back(std::to_string(gens.size() + sols.size()) + " goldens");
}

// ---------------------------------------------------------------- parser differential

json random_value(std::mt19937& rng, int depth) {
  const int kind = static_cast<int>(rng() % (depth > 2 ? 6 : 8));
  switch (kind) {
    case 0: return nullptr;
    case 1: return rng() % 2 == 0;
    case 2: return static_cast<std::int64_t>(rng() % 200000) - 100000;
    case 3: return static_cast<double>(static_cast<int>(rng() % 20000) - 10000) / 64.0;
    case 4:
    case 5: {
      static const std::vector<std::string> parts = {"Paris", " ", "quote\"", "back\\slash", "line\nbreak", "caf\xC3\xA9",
                                                     "tab\t", "\xE2\x9C\x93", "it's", "", "123", "...x"};
      std::string s;
      for (int i = 0, n = static_cast<int>(rng() % 4); i < n; ++i) s += parts[rng() % parts.size()];
      return s;
    }
    case 6: {
      json a = json::array();
      for (int i = 0, n = static_cast<int>(rng() % 4); i < n; ++i) a.push_back(random_value(rng, depth + 1));
      return a;
    }
    default: {
      json o = json::object();
      for (int i = 0, n = static_cast<int>(rng() % 4); i < n; ++i)
        o["k" + std::to_string(rng() % 10)] = random_value(rng, depth + 1);
      return o;
    }
  }
}

// Python-literal rendering: single quotes, True/False/None, trailing commas.
std::string pythonish(const json& v) {
  if (v.is_null()) return "None";
  if (v.is_boolean()) return v.get<bool>() ? "True" : "False";
  if (v.is_number()) return v.dump();
  if (v.is_string()) {
    std::string out = "'";
    for (char ch : v.get<std::string>()) {
      if (ch == '\'' || ch == '\\') out += '\\';
      if (ch == '\n') {
        out += "\\n";
        continue;
      }
      if (ch == '\t') {
        out += "\\t";
        continue;
      }
      out += ch;
    }
    return out + "'";
  }
  std::string out = v.is_array() ? "[" : "{";
  for (auto it = v.begin(); it != v.end(); ++it) {
    if (v.is_object()) out += "'" + it.key() + "': ";
    out += pythonish(*it) + ", ";
  }
  return out + (v.is_array() ? "]" : "}");
}

void parser_differential(Check& c) {
  std::mt19937 rng(20240601);
  std::size_t n = 0;
  // strict subset
  for (int i = 0; i < 120; ++i, ++n) {
    const json v = random_value(rng, 0);
    const std::string doc = i % 2 ? v.dump() : v.dump(2);
    const LoadResult r = load_relaxed(doc);
    c.expect(r.ok() && r.value.dump() == json::parse(doc).dump(), "strict case " + std::to_string(i) + ": " + doc);
  }
  // single-quoted python-style
  for (int i = 0; i < 40; ++i, ++n) {
    json v = json::object();
    v["a"] = random_value(rng, 1);
    v["b"] = random_value(rng, 1);
    const std::string doc = pythonish(v);
    const LoadResult r = load_relaxed(doc);
    c.expect(r.ok() && r.value == v, "relaxed case " + std::to_string(i) + ": " + doc);
  }
  // code fences
  for (int i = 0; i < 20; ++i, ++n) {
    const json v = json::array({random_value(rng, 1)});
    const std::string doc = std::string(i % 2 ? "```json\n" : "```\n") + v.dump() + "\n```";
    const LoadResult r = load_relaxed(doc);
    c.expect(r.ok() && r.value == v, "fenced case " + std::to_string(i));
  }
  // call shapes: wrapper, singleton, flat fallback
  for (int i = 0; i < 30; ++i, ++n) {
    const ToolCall want = call("Tool" + std::to_string(i), {{"x", static_cast<int>(rng() % 9)}, {"y", "v" + std::to_string(i)}});
    json shape;
    switch (i % 3) {
      case 0: shape = json::array({{{"type", "function"}, {"function", {{"name", want.name}, {"arguments", want.arguments.dump()}}}}}); break;
      case 1: shape = {{"name", want.name}, {"arguments", want.arguments}}; break;
      default: shape = json::array({{{"name", want.name}, {"x", want.arguments["x"]}, {"y", want.arguments["y"]}}});
    }
    const std::string completion = answer(i % 2 ? pythonish(shape) : shape.dump());
    const ParseOutcome o = parse_solver_completion(completion);
    c.expect(o.calls && o.calls->size() == 1 && canonical_string(o.calls->front()) == canonical_string(want),
             "shape case " + std::to_string(i) + ": " + completion);
  }
  // placeholders score zero through both reward paths
  const std::vector<std::string> placeholders = {"[...]", "...", "[{...}]", "{\"name\": \"f\", \"arguments\": ...}",
                                                 "[{\"name\": \"f\", \"arguments\": {\"a\": \"...\"}}]",
                                                 "[\xE2\x80\xA6]", "[{'name': 'f', 'arguments': {'a': '\xE2\x80\xA6'}}]",
                                                 "```json\n[...]\n```", "{'a': ...}", "[1, ...]"};
  auto solver = std::make_shared<ScriptedBackend>();  // no transcripts: any probe would throw
  RewardService svc(RewardConfig{}, GatewayConfig{}, solver, solver);
  const std::vector<ToolCall> gold = {call("f", {{"a", 1}})};
  for (std::size_t i = 0; i < placeholders.size(); ++i) {
    for (int variant = 0; variant < 2; ++variant, ++n) {
      const std::string body = variant ? "\n  " + placeholders[i] + "  \n" : placeholders[i];
      const auto sb = solver_breakdown(parse_solver_completion(answer(body)), gold);
      c.expect(sb.total == 0.0 && sb.fmt == 0.0, "solver placeholder " + body);
      const std::string completion = gen("Call f with a 1", R"([{"name": "f", "parameters": {"a": {"type": "integer"}}}])", body);
      const ParseOutcome o = parse_generator_completion(completion);
      const auto gb = generator_breakdown(o, std::nullopt, std::nullopt);
      c.expect(o.flags.placeholder && !o.flags.gold_json_ok, "generator placeholder flags " + body);
      c.expect(gb.valid == 0.0 && gb.curr == 0.0 && gb.fmt == 2, "generator placeholder rewards " + body);
      const ItemResult ir = svc.score_item(Role::generator, {{"completion", completion}}, svc.rewards());
      c.expect(ir.ok && ir.breakdown["probe_successes"].is_null() && ir.breakdown["curr"] == 0.0,
               "service skips probing placeholder " + body);
    }
  }
  c.expect(n >= 200, "corpus size " + std::to_string(n));
  c.notes.push_back(std::to_string(n) + " corpus cases");
}

// ---------------------------------------------------------------- greedy oracle

struct Variant {
  int tool;  // 0..2
  int x, y;  // 0 = absent, else value
};

ToolCall to_call(const Variant& v) {
  static const char* names[] = {"A", "B", "C"};
  json args = json::object();
  if (v.x) args["x"] = v.x;
  if (v.y) args["y"] = v.y;
  return call(names[v.tool], args);
}

// Pair score from the definition, on integer-coded calls.
double oracle_pair(const Variant& p, const Variant& g) {
  const double s_name = p.tool == g.tool ? 1.0 : 0.0;
  const int pk = (p.x != 0) + (p.y != 0), gk = (g.x != 0) + (g.y != 0);
  const int common = (p.x && g.x) + (p.y && g.y);
  const int agree = (p.x && g.x && p.x == g.x) + (p.y && g.y && p.y == g.y);
  const double s_key = pk + gk == 0 ? 1.0 : 2.0 * common / (pk + gk);
  const double s_val = common == 0 ? 1.0 : static_cast<double>(agree) / common;
  return 0.2 * s_name + 0.3 * s_key + 0.5 * s_val;
}

void enumerate_lists(const std::vector<Variant>& vars, std::size_t max_len, std::size_t min_len,
                     std::vector<std::vector<Variant>>& out) {
  std::vector<std::vector<Variant>> frontier = {{}};
  if (min_len == 0) out.push_back({});
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<std::vector<Variant>> next;
    for (const auto& f : frontier)
      for (const auto& v : vars) {
        auto l = f;
        l.push_back(v);
        next.push_back(std::move(l));
      }
    frontier = std::move(next);
    if (len >= min_len) out.insert(out.end(), frontier.begin(), frontier.end());
  }
}

void greedy_oracle(Check& c) {
  std::size_t worse_than_optimal = 0, total = 0;
  auto run = [&](const std::vector<Variant>& vars, std::size_t max_gold, std::size_t max_pred) {
    std::vector<std::vector<Variant>> golds, preds;
    enumerate_lists(vars, max_gold, 1, golds);
    enumerate_lists(vars, max_pred, 0, preds);
    std::vector<std::vector<ToolCall>> gold_calls, pred_calls;
    for (const auto& g : golds) {
      gold_calls.emplace_back();
      for (const auto& v : g) gold_calls.back().push_back(to_call(v));
    }
    for (const auto& p : preds) {
      pred_calls.emplace_back();
      for (const auto& v : p) pred_calls.back().push_back(to_call(v));
    }
    for (std::size_t gi = 0; gi < golds.size(); ++gi)
      for (std::size_t pi = 0; pi < preds.size(); ++pi) {
        ++total;
        const auto& G = golds[gi];
        const auto& P = preds[pi];
        const MatchReport m = accuracy_reward(pred_calls[pi], gold_calls[gi]);
        // independent greedy simulation
        std::vector<bool> used(P.size(), false);
        double sum = 0.0;
        bool same = true;
        for (std::size_t g = 0; g < G.size(); ++g) {
          int best = -1;
          double best_s = -1.0;
          for (std::size_t p = 0; p < P.size(); ++p) {
            if (used[p]) continue;
            const double s = oracle_pair(P[p], G[g]);
            if (s > best_s) {
              best_s = s;
              best = static_cast<int>(p);
            }
          }
          if (best < 0) {
            same = same && !m.matches[g].pred_index.has_value();
            continue;
          }
          used[static_cast<std::size_t>(best)] = true;
          sum += best_s;
          same = same && m.matches[g].pred_index == static_cast<std::size_t>(best) &&
                 std::fabs(m.matches[g].pair.score - best_s) < 1e-12;
        }
        const double extra = P.size() > G.size() ? static_cast<double>(P.size() - G.size()) : 0.0;
        const double r = P.empty() ? 0.0 : sum / static_cast<double>(G.size()) / (1.0 + 0.25 * extra);
        same = same && std::fabs(m.r_acc - r) < 1e-12;
        if (same)
          ++c.cases;
        else
          c.expect(false, "matcher differs for gold list " + std::to_string(gi) + ", pred list " + std::to_string(pi));
        // optimal assignment by brute force over pred permutations
        std::vector<int> idx(std::max(P.size(), G.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = static_cast<int>(k);
        double best_total = 0.0;
        do {
          double s = 0.0;
          for (std::size_t g = 0; g < G.size(); ++g)
            if (static_cast<std::size_t>(idx[g]) < P.size()) s += oracle_pair(P[static_cast<std::size_t>(idx[g])], G[g]);
          best_total = std::max(best_total, s);
        } while (std::next_permutation(idx.begin(), idx.end()));
        if (best_total > sum + 1e-12) ++worse_than_optimal;
      }
  };
  std::vector<Variant> presence, valued;
  for (int t = 0; t < 3; ++t)
    for (int x = 0; x <= 2; ++x)
      for (int y = 0; y <= 2; ++y) {
        valued.push_back({t, x, y});
        if (x <= 1 && y <= 1) presence.push_back({t, x, y});
      }
  run(presence, 3, 3);  // every list up to length 3 over tool x key-presence
  run(valued, 2, 2);    // values varied, lists up to length 2
  c.expect(total > 1000, "enumeration size");
  c.notes.push_back(std::to_string(total) + " list pairs; greedy below optimal in " +
                    std::to_string(worse_than_optimal));
}

// ---------------------------------------------------------------- curation

void curation_determinism(Check& c) {
  const SpecDistribution dist;
  const auto world = synthetic::make_world(dist, 17, 200);
  const auto pool = synthesize_pool(*world.generator, dist, 17, 200, 1.0, 2048, 2);
  CurationConfig cfg;
  cfg.pool_size = 200;
  cfg.output_size = 50;
  cfg.threads = 4;
  cfg.seed = 5;
  const auto first = curate_pool(pool, *world.solver, cfg, 32);
  const std::string a = dataset_text(first.dataset);
  const std::string b = dataset_text(curate_pool(pool, *world.solver, cfg, 32).dataset);
  c.expect(first.dataset.size() == 50, "dataset size " + std::to_string(first.dataset.size()));
  c.expect(a == b, "two runs byte-identical");

  const auto dir = scratch("curation");
  {
    ProbeJournal journal(dir / "journal.lines");
    CurationHooks hooks;
    hooks.journal = &journal;
    hooks.after_probe = [](std::size_t k) {
      if (k == 60) throw std::runtime_error("interrupt");
    };
    bool interrupted = false;
    try {
      curate_pool(pool, *world.solver, cfg, 32, hooks);
    } catch (const std::runtime_error&) {
      interrupted = true;
    }
    c.expect(interrupted, "interrupt fired");
  }
  ProbeJournal journal(dir / "journal.lines");
  CurationHooks hooks;
  hooks.journal = &journal;
  c.expect(dataset_text(curate_pool(pool, *world.solver, cfg, 32, hooks).dataset) == a, "resume byte-identical");

  const auto m = segment_means(first.dataset);
  c.expect(m[0] >= m[1] && m[1] >= m[2], "thirds non-increasing: " + std::to_string(m[0]) + " " +
                                             std::to_string(m[1]) + " " + std::to_string(m[2]));
  std::vector<GeneratedTask> tasks;
  for (const auto& e : pool)
    if (auto o = parse_generator_completion(e.completion); o.task) tasks.push_back(*o.task);
  const auto once = dedup(tasks);
  const auto twice = dedup(once);
  c.expect(once.size() < tasks.size(), "pool contains duplicates");
  bool same = once.size() == twice.size();
  for (std::size_t i = 0; same && i < once.size(); ++i) same = task_signature(once[i]) == task_signature(twice[i]);
  c.expect(same, "dedup idempotent");
  c.notes.push_back("thirds " + std::to_string(m[0]).substr(0, 5) + "/" + std::to_string(m[1]).substr(0, 5) + "/" +
                    std::to_string(m[2]).substr(0, 5));
}

// ---------------------------------------------------------------- evaluation

void evaluation_crosscheck(Check& c) {
  const SpecDistribution dist;
  const auto world = synthetic::make_world(dist, 29, 60);
  std::size_t items = 0, correct = 0;
  auto cross = [&](const std::string& completion, const std::vector<ToolCall>& gold, const std::string& tag) {
    BenchmarkItem it;
    it.id = tag;
    it.gold_calls = gold;
    const Verdict v = ast_match(completion, it);
    const ParseOutcome o = parse_solver_completion(completion, true);
    const MatchReport m = accuracy_reward(o.calls ? *o.calls : std::vector<ToolCall>{}, gold);
    const bool perfect = m.r_acc == 1.0 && m.penalty_factor == 1.0;
    c.expect(v.correct == perfect, tag + ": ast_match " + std::to_string(v.correct) + " vs r_acc " +
                                       std::to_string(m.r_acc));
    ++items;
    correct += v.correct;
  };
  for (std::size_t i = 0; i < world.tasks.size(); ++i) {
    const auto& t = world.tasks[i];
    if (t.kind != synthetic::WorldTask::Kind::normal) continue;
    const auto transcript = synthetic::solver_transcript(t, 8, 29, i);
    for (std::size_t k = 0; k < transcript.size(); ++k)
      cross(transcript[k], t.gold, "task " + std::to_string(i) + " sample " + std::to_string(k));
  }

  // Hand-labelled failures.
  const std::vector<ToolCall> g1 = {call("Book", {{"city", "Paris"}, {"n", 2}})};
  const std::vector<ToolCall> g2 = {call("Book", {{"city", "Paris"}}), call("Pay", {{"amount", 30}})};
  struct Labelled {
    std::string completion;
    const std::vector<ToolCall>* gold;
    std::string label, sub;
  };
  const std::vector<Labelled> cases = {
      {"", &g1, "format", "unparseable"},
      {"I'd book Paris", &g1, "format", "unparseable"},
      {answer("[...]"), &g1, "format", "unparseable"},
      {answer("{'name': 'Book', 'arguments': {'city': 'Paris', 'n': 2"), &g1, "format", "unparseable"},
      {answer(R"([{"arguments": {"city": "Paris"}}])"), &g1, "format", "unparseable"},
      {answer(R"([{"name": "Book", "arguments": {"city": {"name": "Paris"}, "n": 2}}])"), &g1, "format", "unparseable"},
      {answer(R"([])"), &g1, "format", "unparseable"},
      {answer(R"([{"name": "Book", "arguments": {"city": "Paris", "n": 2}}, {"name": "Book"}])"), &g1, "structural",
       "incorrect_call_count"},
      {answer(R"([{"name": "Book", "arguments": {"city": "Paris"}}])"), &g2, "structural", "incorrect_call_count"},
      {answer(R"([{"name": "Reserve", "arguments": {"city": "Paris", "n": 2}}])"), &g1, "structural", "wrong_tool_name"},
      {answer(R"([{"name": "Book", "arguments": {"city": "Paris"}}, {"name": "Book", "arguments": {"amount": 30}}])"),
       &g2, "structural", "wrong_tool_name"},
      {answer(R"([{"name": "Book", "arguments": {"city": "Paris", "n": 2, "vip": true}}])"), &g1, "structural",
       "extra_arguments"},
      {answer(R"([{"name": "Book", "arguments": {"city": "Rome", "n": 2, "vip": true}}])"), &g1, "structural",
       "extra_arguments"},
      {answer(R"([{"name": "Book", "arguments": {"city": "Paris"}}])"), &g1, "structural", "missing_arguments"},
      {answer(R"([{"name": "Pay", "arguments": {}}, {"name": "Book", "arguments": {"city": "Paris"}}])"), &g2,
       "structural", "missing_arguments"},
      {answer(R"([{"name": "Book", "arguments": {"city": "", "n": 2}}])"), &g1, "semantic", "missing_gold_value"},
      {answer(R"([{"name": "Book", "arguments": {"city": null, "n": 2}}])"), &g1, "semantic", "missing_gold_value"},
      {answer(R"([{"name": "Book", "arguments": {"city": "Paris", "n": 3}}])"), &g1, "semantic",
       "wrong_argument_value"},
      {answer(R"([{"name": "Book", "arguments": {"city": "paris", "n": 2}}])"), &g1, "semantic",
       "wrong_argument_value"},
      {answer(R"([{"name": "Pay", "arguments": {"amount": 31}}, {"name": "Book", "arguments": {"city": "Paris"}}])"),
       &g2, "semantic", "wrong_argument_value"},
  };
  for (std::size_t i = 0; i < cases.size(); ++i) {
    BenchmarkItem it;
    it.id = "h" + std::to_string(i);
    it.gold_calls = *cases[i].gold;
    const Verdict v = ast_match(cases[i].completion, it);
    const std::string got = v.error ? std::string(to_string(v.error->label)) + "/" + v.error->sub_cause : "correct";
    c.expect(!v.correct && got == cases[i].label + "/" + cases[i].sub,
             "hand label " + std::to_string(i) + ": got " + got + ", want " + cases[i].label + "/" + cases[i].sub);
    cross(cases[i].completion, *cases[i].gold, "hand " + std::to_string(i));
  }
  c.notes.push_back(std::to_string(items) + " items, " + std::to_string(correct) + " correct, " +
                    std::to_string(cases.size()) + " hand labels");
}

// ---------------------------------------------------------------- service

void service_contract(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const SpecDistribution dist;
  const auto world = synthetic::make_world(dist, 41, 80);
  auto svc = std::make_shared<const RewardService>(RewardConfig{}, GatewayConfig{}, world.solver, world.solver,
                                                   PromptBundle::defaults(), 4);
  std::vector<json> batches;
  for (int b = 0; b < 10; ++b) {
    json items = json::array();
    const bool gen_role = b % 2 == 1;
    for (int i = 0; i < 8; ++i) {
      const auto& t = world.tasks[static_cast<std::size_t>(b * 8 + i)];
      if (gen_role)
        items.push_back({{"completion", t.completion}});
      else
        items.push_back({{"completion", synthetic::solver_answer(t.gold)}, {"context", {{"gold_calls", to_json(t.gold)}}}});
    }
    items.push_back({{"completion", 42}});  // faulted: wrong type
    if (gen_role) {
      // parses cleanly but the scripted solver has no transcript for it
      auto t = synthetic::make_task({"travel", ContextType::single_turn, 2, 1}, 999, static_cast<std::uint64_t>(b));
      items.push_back({{"completion", t.completion}});
    } else {
      items.push_back({{"completion", "x"}, {"context", {{"gold_calls", json::array()}}}});
    }
    batches.push_back({{"role", gen_role ? "generator" : "solver"}, {"items", items}});
  }
  std::vector<json> sequential;
  for (const auto& b : batches)
    sequential.push_back(svc->score_batch(role_from_string(b["role"].get<std::string>()), b));
  for (const auto& s : sequential) {
    const auto& r = s["results"];
    c.expect(r.size() == 10, "batch keeps every item");
    for (std::size_t i = 0; i < 8; ++i) c.expect(r[i]["ok"].get<bool>(), "healthy item ok");
    c.expect(!r[8]["ok"].get<bool>() && r[8]["total"] == 0.0, "faulted item isolated");
    c.expect(!r[9]["ok"].get<bool>() && r[9]["total"] == 0.0, "backend fault isolated");
  }

  RewardServer server(svc);
  const int port = server.start("127.0.0.1", 0);
  std::atomic<bool> stop{false};
  std::atomic<int> health_ok{0}, health_bad{0};
  std::thread prober([&] {
    httplib::Client cli("127.0.0.1", port);
    while (!stop) {
      auto r = cli.Get("/v1/health");
      (r && r->status == 200 ? health_ok : health_bad)++;
      std::this_thread::sleep_for(std::chrono::milliseconds(3));
    }
  });
  std::vector<std::future<json>> futs;
  for (int b = 0; b < 10; ++b)
    futs.push_back(std::async(std::launch::async, [&, b] {
      httplib::Client cli("127.0.0.1", port);
      cli.set_read_timeout(30, 0);
      const std::string path = "/v1/rewards/" + batches[static_cast<std::size_t>(b)]["role"].get<std::string>();
      auto r = cli.Post(path, batches[static_cast<std::size_t>(b)].dump(), "application/json");
      return r && r->status == 200 ? json::parse(r->body) : json{{"status", r ? r->status : -1}};
    }));
  for (int b = 0; b < 10; ++b)
    c.expect(futs[static_cast<std::size_t>(b)].get() == sequential[static_cast<std::size_t>(b)],
             "concurrent batch " + std::to_string(b) + " equals sequential");
  stop = true;
  prober.join();
  httplib::Client cli("127.0.0.1", port);
  auto bad = cli.Post("/v1/rewards/solver", "{\"items\": 3}", "application/json");
  c.expect(bad && bad->status == 400, "malformed envelope is 400");
  server.stop();
  c.expect(health_ok > 0 && health_bad == 0,
           "health under load: " + std::to_string(health_ok.load()) + " ok, " + std::to_string(health_bad.load()) + " bad");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(secs < 30.0, "runtime " + std::to_string(secs) + " s");
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<void(Check&)> run;
    double budget_s;
  };
  const std::vector<Criterion> criteria = {
      {"difficulty-curve", difficulty_curve, 1.0},
      {"reward-goldens", reward_goldens, 0.0},
      {"parser-differential", parser_differential, 5.0},
      {"greedy-matcher-oracle", greedy_oracle, 60.0},
      {"curation-determinism", curation_determinism, 0.0},
      {"evaluation-crosscheck", evaluation_crosscheck, 0.0},
      {"service-contract", service_contract, 30.0},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.run(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cr.budget_s > 0.0 && secs > cr.budget_s)
      c.failures.push_back("runtime " + std::to_string(secs) + " s over budget " + std::to_string(cr.budget_s) + " s");
    std::ostringstream line;
    line << (c.failures.empty() ? "PASS " : "FAIL ") << cr.name << " (" << c.cases << " checks, ";
    line.precision(3);
    line << std::fixed << secs << " s";
    for (const auto& n : c.notes) line << "; " << n;
    line << ")";
    std::cout << line.str() << "\n";
    for (const auto& f : c.failures) std::cout << "    " << f << "\n";
    failed += !c.failures.empty();
  }
  std::cout << (failed ? "acceptance: " + std::to_string(failed) + " criteria failed" : "acceptance: all criteria passed")
            << std::endl;
  return failed ? 1 : 0;
}
