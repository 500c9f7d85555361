#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"
#include "toolplay/curate.hpp"
#include "toolplay/errors.hpp"
#include "toolplay/gateway.hpp"
#include "toolplay/genreward.hpp"
#include "toolplay/solreward.hpp"
#include "toolplay/taskspec.hpp"

namespace toolplay {

struct RewardConfig {
  ValidityWeights validity;
  DifficultyBand band;
  SolverFormatWeights solver_format;
  AccuracyWeights accuracy;

  void validate() const {
    validity.validate();
    band.validate();
    solver_format.validate();
    accuracy.validate();
  }
};

struct BackendConfig {
  std::string kind = "scripted";  // scripted | remote
  std::string fixtures;           // scripted: directory of transcript files
  std::string endpoint;           // remote
  std::string token;
  std::string model;
  int max_retries = 3;
};

struct GatewayConfig {
  BackendConfig generator;
  BackendConfig solver;
  ProbeParams probe;
  JudgeParams judge;
  double rollout_temperature = 1.0;
  int rollout_max_tokens = 2048;
  int max_in_flight = 8;
};

struct ServiceConfig {
  int threads = 4;
  std::string host = "127.0.0.1";
};

struct SelfplayConfig {
  int iterations = 1;
  std::size_t generator_batch = 32;  // phase (a) rollouts per iteration
  int solver_rollouts = 1;           // phase (c) rollouts per dataset record
};

struct Config {
  SpecDistribution taskspec;
  RewardConfig reward;
  CurationConfig curation;
  GatewayConfig gateway;
  ServiceConfig service;
  SelfplayConfig selfplay;
  std::string prompts_dir;  // empty: built-in templates

  void validate() const {
    taskspec.validate();
    reward.validate();
    curation.validate();
    if (gateway.probe.k != reward.band.k_samples)
      throw ConfigError("gateway.probe.k must equal reward.band.k_samples");
  }

  PromptBundle prompts() const {
    return prompts_dir.empty() ? PromptBundle::defaults() : PromptBundle::load(prompts_dir);
  }
};

namespace detail {

template <class T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

inline BackendConfig backend_from_json(const nlohmann::json& j) {
  BackendConfig b;
  read_opt(j, "kind", b.kind);
  read_opt(j, "fixtures", b.fixtures);
  read_opt(j, "endpoint", b.endpoint);
  read_opt(j, "token", b.token);
  read_opt(j, "model", b.model);
  read_opt(j, "max_retries", b.max_retries);
  if (b.kind != "scripted" && b.kind != "remote") throw ConfigError("backend kind must be scripted or remote");
  return b;
}

inline nlohmann::json to_json(const BackendConfig& b) {
  return {{"kind", b.kind},   {"fixtures", b.fixtures}, {"endpoint", b.endpoint},
          {"model", b.model}, {"max_retries", b.max_retries}};
}

}  // namespace detail

/// Applies a (possibly partial) reward section on top of `r`.
inline void merge_reward_json(RewardConfig& r, const nlohmann::json& j) {
  using detail::read_opt;
  if (auto g = j.find("generator"); g != j.end()) {
    read_opt(*g, "lambda_menu", r.validity.lambda_menu);
    read_opt(*g, "lambda_gold", r.validity.lambda_gold);
    read_opt(*g, "lambda_value", r.validity.lambda_value);
    read_opt(*g, "p_low", r.band.p_low);
    read_opt(*g, "p_high", r.band.p_high);
    read_opt(*g, "sigma", r.band.sigma);
    read_opt(*g, "k_samples", r.band.k_samples);
  }
  if (auto s = j.find("solver"); s != j.end()) {
    read_opt(*s, "lambda_tag", r.solver_format.lambda_tag);
    read_opt(*s, "lambda_parse", r.solver_format.lambda_parse);
    read_opt(*s, "lambda_norm", r.solver_format.lambda_norm);
    read_opt(*s, "lambda_name", r.accuracy.lambda_name);
    read_opt(*s, "lambda_key", r.accuracy.lambda_key);
    read_opt(*s, "lambda_val", r.accuracy.lambda_val);
    read_opt(*s, "alpha", r.accuracy.alpha);
  }
  r.validate();
}

inline nlohmann::json to_json(const RewardConfig& r) {
  return {{"generator",
           {{"lambda_menu", r.validity.lambda_menu},
            {"lambda_gold", r.validity.lambda_gold},
            {"lambda_value", r.validity.lambda_value},
            {"p_low", r.band.p_low},
            {"p_high", r.band.p_high},
            {"sigma", r.band.sigma},
            {"k_samples", r.band.k_samples}}},
          {"solver",
           {{"lambda_tag", r.solver_format.lambda_tag},
            {"lambda_parse", r.solver_format.lambda_parse},
            {"lambda_norm", r.solver_format.lambda_norm},
            {"lambda_name", r.accuracy.lambda_name},
            {"lambda_key", r.accuracy.lambda_key},
            {"lambda_val", r.accuracy.lambda_val},
            {"alpha", r.accuracy.alpha}}}};
}

inline Config config_from_json(const nlohmann::json& j) {
  using detail::read_opt;
  Config c;
  try {
    if (auto t = j.find("taskspec"); t != j.end()) c.taskspec = spec_distribution_from_json(*t);
    if (auto r = j.find("reward"); r != j.end()) merge_reward_json(c.reward, *r);
    if (auto cu = j.find("curation"); cu != j.end()) {
      auto& cc = c.curation;
      read_opt(*cu, "pool_size", cc.pool_size);
      read_opt(*cu, "output_size", cc.output_size);
      read_opt(*cu, "agreement_threshold", cc.agreement_threshold);
      read_opt(*cu, "easy_threshold", cc.easy_threshold);
      read_opt(*cu, "hard_threshold", cc.hard_threshold);
      read_opt(*cu, "domain_cap_fraction", cc.domain_cap_fraction);
      if (auto m = cu->find("mix"); m != cu->end()) {
        cc.mix = {m->at("easy").get<double>(), m->at("medium").get<double>(), m->at("hard").get<double>()};
      }
      read_opt(*cu, "segment_dominant", cc.segment_dominant);
      read_opt(*cu, "reuse_probe_samples", cc.reuse_probe_samples);
      read_opt(*cu, "require_structural", cc.require_structural);
      read_opt(*cu, "threads", cc.threads);
    }
    if (auto g = j.find("gateway"); g != j.end()) {
      auto& gc = c.gateway;
      if (auto b = g->find("generator"); b != g->end()) gc.generator = detail::backend_from_json(*b);
      if (auto b = g->find("solver"); b != g->end()) gc.solver = detail::backend_from_json(*b);
      if (auto p = g->find("probe"); p != g->end()) {
        read_opt(*p, "temperature", gc.probe.temperature);
        read_opt(*p, "max_tokens", gc.probe.max_tokens);
        read_opt(*p, "k", gc.probe.k);
      }
      if (auto p = g->find("judge"); p != g->end()) {
        read_opt(*p, "temperature", gc.judge.temperature);
        read_opt(*p, "max_tokens", gc.judge.max_tokens);
      }
      read_opt(*g, "rollout_temperature", gc.rollout_temperature);
      read_opt(*g, "rollout_max_tokens", gc.rollout_max_tokens);
      read_opt(*g, "max_in_flight", gc.max_in_flight);
    }
    if (auto s = j.find("service"); s != j.end()) {
      read_opt(*s, "threads", c.service.threads);
      read_opt(*s, "host", c.service.host);
    }
    if (auto s = j.find("selfplay"); s != j.end()) {
      read_opt(*s, "iterations", c.selfplay.iterations);
      read_opt(*s, "generator_batch", c.selfplay.generator_batch);
      read_opt(*s, "solver_rollouts", c.selfplay.solver_rollouts);
    }
    read_opt(j, "prompts_dir", c.prompts_dir);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  c.curation.probe = c.gateway.probe;
  c.validate();
  return c;
}

inline nlohmann::json to_json(const Config& c) {
  const auto& cc = c.curation;
  const auto& gc = c.gateway;
  return {{"taskspec", to_json(c.taskspec)},
          {"reward", to_json(c.reward)},
          {"curation",
           {{"pool_size", cc.pool_size},
            {"output_size", cc.output_size},
            {"agreement_threshold", cc.agreement_threshold},
            {"easy_threshold", cc.easy_threshold},
            {"hard_threshold", cc.hard_threshold},
            {"domain_cap_fraction", cc.domain_cap_fraction},
            {"mix", {{"easy", cc.mix[0]}, {"medium", cc.mix[1]}, {"hard", cc.mix[2]}}},
            {"segment_dominant", cc.segment_dominant},
            {"reuse_probe_samples", cc.reuse_probe_samples},
            {"require_structural", cc.require_structural},
            {"threads", cc.threads}}},
          {"gateway",
           {{"generator", detail::to_json(gc.generator)},
            {"solver", detail::to_json(gc.solver)},
            {"probe", {{"temperature", gc.probe.temperature}, {"max_tokens", gc.probe.max_tokens}, {"k", gc.probe.k}}},
            {"judge", {{"temperature", gc.judge.temperature}, {"max_tokens", gc.judge.max_tokens}}},
            {"rollout_temperature", gc.rollout_temperature},
            {"rollout_max_tokens", gc.rollout_max_tokens},
            {"max_in_flight", gc.max_in_flight}}},
          {"service", {{"threads", c.service.threads}, {"host", c.service.host}}},
          {"selfplay",
           {{"iterations", c.selfplay.iterations},
            {"generator_batch", c.selfplay.generator_batch},
            {"solver_rollouts", c.selfplay.solver_rollouts}}},
          {"prompts_dir", c.prompts_dir}};
}

inline Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  Config c = config_from_json(j);
  // Relative fixture/prompt paths resolve against the config file's directory.
  const auto base = path.parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  resolve(c.gateway.generator.fixtures);
  resolve(c.gateway.solver.fixtures);
  resolve(c.prompts_dir);
  return c;
}

}  // namespace toolplay
