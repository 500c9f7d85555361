#include <gtest/gtest.h>

#include <map>
#include <set>

#include "support.hpp"
#include "toolplay/prompts.hpp"
#include "toolplay/taskspec.hpp"

using namespace toolplay;

TEST(TaskSpec, InvariantsRejectBadShapes) {
  EXPECT_TRUE(is_valid({"travel", ContextType::single_turn, 2, 1}));
  EXPECT_FALSE(is_valid({"travel", ContextType::multi_turn, 4, 2}));
  EXPECT_FALSE(is_valid({"travel", ContextType::single_turn, 7, 2}));
  EXPECT_FALSE(is_valid({"travel", ContextType::single_turn, 9, 1}));
  EXPECT_FALSE(is_valid({"travel", ContextType::single_turn, 1, 1}));
}

TEST(TaskSpec, JsonRoundTrip) {
  const TaskSpec s{"finance", ContextType::multi_turn, 3, 1};
  nlohmann::json j;
  to_json(j, s);
  EXPECT_EQ(j.get<TaskSpec>(), s);
}

TEST(SampleSpec, SingleDomainDegenerate) {
  SpecDistribution d;
  d.domain_weights = {{"travel", 1.0}};
  d.p_multi_turn = 0.0;
  d.p_two_calls = 0.0;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const TaskSpec s = sample_spec(d, seed);
    EXPECT_EQ(s.domain, "travel");
    EXPECT_EQ(s.context_type, ContextType::single_turn);
    EXPECT_EQ(s.num_gold_calls, 1);
    EXPECT_GE(s.tool_menu_size, 2);
    EXPECT_LE(s.tool_menu_size, 8);
  }
}

TEST(SampleSpec, AllZeroWeightsIsConfigError) {
  SpecDistribution d;
  d.domain_weights = {{"a", 0.0}, {"b", 0.0}};
  EXPECT_THROW(sample_spec(d, 1), ConfigError);
  d.domain_weights = {{"a", -1.0}};
  EXPECT_THROW(d.validate(), ConfigError);
  d.domain_weights = {{"a", 1.0}};
  d.p_multi_turn = 1.5;
  EXPECT_THROW(d.validate(), ConfigError);
}

TEST(SampleSpec, DeterministicAndBatchIndependent) {
  const SpecDistribution d;
  EXPECT_EQ(sample_spec(d, 42), sample_spec(d, 42));
  const auto all = sample_specs(d, 9, 100);
  const auto tail = sample_specs(d, 9, 40, 60);
  for (std::size_t i = 0; i < 40; ++i) EXPECT_EQ(all[60 + i], tail[i]);
  EXPECT_EQ(sample_specs(d, 9, 100), all);
}

TEST(SampleSpec, ClosureOver100kSeeds) {
  const SpecDistribution d;
  for (std::uint64_t i = 0; i < 100000; ++i) {
    const TaskSpec s = sample_spec_at(d, 12345, i);
    ASSERT_TRUE(is_valid(s)) << spec_violation(s);
  }
}

// Monte-Carlo frequency check of the configured probabilities (100k draws).
TEST(SampleSpec, ContextAndCallCountFrequencies) {
  const SpecDistribution d;
  std::size_t multi = 0, single = 0, two = 0, small = 0, n1_single = 0;
  const std::size_t N = 100000;
  for (std::uint64_t i = 0; i < N; ++i) {
    const TaskSpec s = sample_spec_at(d, 2024, i);
    if (s.context_type == ContextType::multi_turn) {
      ++multi;
      continue;
    }
    ++single;
    if (s.num_gold_calls == 2) {
      ++two;
      EXPECT_GE(s.tool_menu_size, 3);
      EXPECT_LE(s.tool_menu_size, 5);
    } else {
      ++n1_single;
      if (s.tool_menu_size <= 4) ++small;
    }
  }
  EXPECT_NEAR(static_cast<double>(multi) / N, 0.10, 0.01);
  EXPECT_NEAR(static_cast<double>(two) / single, 0.20, 0.01);
  EXPECT_NEAR(static_cast<double>(small) / n1_single, 0.50, 0.01);
}

namespace {

// Pearson statistic of observed counts against weights.
double chi_square(const std::map<std::string, std::size_t>& counts,
                  const std::vector<std::pair<std::string, double>>& weights, std::size_t n) {
  double total = 0.0;
  for (const auto& w : weights) total += w.second;
  double chi = 0.0;
  for (const auto& [name, w] : weights) {
    const double expected = static_cast<double>(n) * w / total;
    const double obs = counts.count(name) ? static_cast<double>(counts.at(name)) : 0.0;
    chi += (obs - expected) * (obs - expected) / expected;
  }
  return chi;
}

}  // namespace

TEST(SampleSpec, UniformDomainsPassChiSquare) {
  const SpecDistribution d;
  ASSERT_EQ(d.domain_weights.size(), 32u);
  for (const auto& w : d.domain_weights) EXPECT_EQ(w.second, 0.03125);
  std::map<std::string, std::size_t> counts;
  const std::size_t N = 64000;
  for (std::uint64_t i = 0; i < N; ++i) ++counts[sample_spec_at(d, 77, i).domain];
  EXPECT_EQ(counts.size(), 32u);
  // 31 degrees of freedom; 61.1 is the 0.999 quantile.
  EXPECT_LT(chi_square(counts, d.domain_weights, N), 61.1);
}

TEST(SampleSpec, UnnormalizedWeightsConverge) {
  SpecDistribution d;
  d.domain_weights = {{"a", 1.0}, {"b", 2.0}, {"c", 3.0}, {"d", 0.0}, {"e", 4.0}};
  std::map<std::string, std::size_t> counts;
  const std::size_t N = 50000;
  for (std::uint64_t i = 0; i < N; ++i) ++counts[sample_spec_at(d, 5, i).domain];
  EXPECT_EQ(counts.count("d"), 0u);
  std::vector<std::pair<std::string, double>> positive = {{"a", 1.0}, {"b", 2.0}, {"c", 3.0}, {"e", 4.0}};
  // 3 degrees of freedom; 16.27 is the 0.999 quantile.
  EXPECT_LT(chi_square(counts, positive, N), 16.27);
}

TEST(SpecDistributionConfig, FromJson) {
  const auto j = nlohmann::json::parse(R"({"domain_weights": {"travel": 2, "finance": 1}, "p_multi_turn": 0.0})");
  const SpecDistribution d = spec_distribution_from_json(j);
  EXPECT_EQ(d.domain_weights.size(), 2u);
  EXPECT_EQ(d.p_multi_turn, 0.0);
  EXPECT_EQ(d.p_two_calls, 0.2);
  EXPECT_THROW(spec_distribution_from_json(nlohmann::json::parse(R"({"domain_weights": {"x": 0}})")), ConfigError);
}

// Default templates are pinned to the asset files byte for byte.
TEST(Prompts, DefaultsMatchAssetBytes) {
  const auto dir = support::assets() / "prompts";
  EXPECT_EQ(std::string(default_prompts::kGenerator), support::slurp(dir / "generator.txt"));
  EXPECT_EQ(std::string(default_prompts::kSolver), support::slurp(dir / "solver.txt"));
  EXPECT_EQ(std::string(default_prompts::kJudge), support::slurp(dir / "judge.txt"));
  const PromptBundle loaded = PromptBundle::load(dir);
  EXPECT_EQ(loaded.generator.text(), PromptBundle::defaults().generator.text());
}

TEST(Prompts, GeneratorControlSpec) {
  const std::string p = render_generator_prompt({"travel", ContextType::single_turn, 2, 1});
  EXPECT_NE(p.find("Domain: travel"), std::string::npos);
  EXPECT_NE(p.find("Number of gold tool calls: 1"), std::string::npos);
  EXPECT_NE(p.find("Number of available tools: 2"), std::string::npos);
  for (const char* slot : {"{domain}", "{context_type}", "{tool_menu_size}", "{num_calls}"})
    EXPECT_EQ(p.find(slot), std::string::npos) << slot;
}

TEST(Prompts, ContextTypeChangesOneLine) {
  const std::string a = render_generator_prompt({"finance", ContextType::multi_turn, 3, 1});
  const std::string b = render_generator_prompt({"finance", ContextType::single_turn, 3, 1});
  auto lines = [](const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
  };
  const auto la = lines(a), lb = lines(b);
  ASSERT_EQ(la.size(), lb.size());
  std::vector<std::size_t> diff;
  for (std::size_t i = 0; i < la.size(); ++i)
    if (la[i] != lb[i]) diff.push_back(i);
  ASSERT_EQ(diff.size(), 1u);
  EXPECT_NE(la[diff[0]].find("Context type: multi_turn"), std::string::npos);
}

TEST(Prompts, ZeroSlotTemplateVerbatim) {
  const PromptTemplate t("no slots {here: 1} at all", {});
  EXPECT_EQ(t.render({}), "no slots {here: 1} at all");
}

TEST(Prompts, TemplateErrors) {
  EXPECT_THROW(PromptTemplate("hello {who} and {what}", {"who"}), TemplateError);
  EXPECT_THROW(PromptTemplate("hello", {"who"}), TemplateError);
  const PromptTemplate t("hello {who}", {"who"});
  EXPECT_THROW(t.render({}), TemplateError);
  EXPECT_EQ(t.render({{"who", "{who}"}}), "hello {who}");
}

TEST(Prompts, SolverPromptSingleSubstitution) {
  ToolSpec tool{"Echo", "echo", {{"text", {"string", "t"}}}, {"text"}};
  const std::string p = render_solver_prompt("q-sentinel-123", {tool});
  auto count = [&](const std::string& needle) {
    std::size_t n = 0;
    for (std::size_t pos = p.find(needle); pos != std::string::npos; pos = p.find(needle, pos + 1)) ++n;
    return n;
  };
  EXPECT_EQ(count("q-sentinel-123"), 1u);
  EXPECT_EQ(count("\"Echo\""), 1u);
  EXPECT_EQ(count("USER_QUERY"), 0u);

  // The placeholder token inside user text is left alone.
  const std::string q = "please print USER_QUERY and TOOL_MENU literally";
  const std::string p2 = render_solver_prompt(q, {tool});
  EXPECT_NE(p2.find(q), std::string::npos);

  EXPECT_THROW(render_solver_prompt("q", {}), ValidationError);
}

TEST(Prompts, SolverMenuOrderPreserved) {
  std::vector<ToolSpec> menu;
  for (int i = 0; i < 8; ++i) menu.push_back({"Tool" + std::to_string(i), "d", {}, {}});
  const std::string p = render_solver_prompt("q", menu);
  const std::string serialized = serialize_menu(menu);
  const auto at = p.find(serialized);
  ASSERT_NE(at, std::string::npos);
  const auto back = nlohmann::json::parse(p.substr(at, serialized.size()));
  ASSERT_EQ(back.size(), 8u);
  for (int i = 0; i < 8; ++i) EXPECT_EQ(back[i]["name"], "Tool" + std::to_string(i));
}

TEST(Prompts, ControlSpecRoundTrip) {
  const SpecDistribution d;
  for (std::uint64_t i = 0; i < 500; ++i) {
    const TaskSpec s = sample_spec_at(d, 3, i);
    const auto back = parse_control_spec(render_generator_prompt(s));
    ASSERT_TRUE(back.has_value());
    EXPECT_EQ(*back, s);
  }
}
