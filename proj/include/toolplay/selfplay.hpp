#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "toolplay/config.hpp"
#include "toolplay/curate.hpp"
#include "toolplay/errors.hpp"
#include "toolplay/gateway.hpp"
#include "toolplay/hash.hpp"
#include "toolplay/service.hpp"

namespace toolplay {

enum class Phase { generator_training, dataset_construction, solver_training, done };

inline std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::generator_training: return "generator_training";
    case Phase::dataset_construction: return "dataset_construction";
    case Phase::solver_training: return "solver_training";
    case Phase::done: return "done";
  }
  return "done";
}

inline Phase phase_from_string(std::string_view s) {
  for (Phase p : {Phase::generator_training, Phase::dataset_construction, Phase::solver_training, Phase::done})
    if (to_string(p) == s) return p;
  throw ValidationError("unknown phase '" + std::string(s) + "'");
}

struct Artifact {
  std::string path;  // relative to the run directory
  std::string hash;
};

/// Checkpoint: the next phase to run plus hashes of every finished artifact.
struct IterationState {
  int iteration = 1;
  Phase phase = Phase::generator_training;
  std::map<std::string, Artifact> artifacts;
  std::map<std::string, std::size_t> counters;
};

inline nlohmann::json to_json(const IterationState& s) {
  nlohmann::json arts = nlohmann::json::object();
  for (const auto& [k, a] : s.artifacts) arts[k] = {{"path", a.path}, {"hash", a.hash}};
  return {{"iteration", s.iteration}, {"phase", std::string(to_string(s.phase))}, {"artifacts", arts},
          {"counters", s.counters}};
}

inline IterationState iteration_state_from_json(const nlohmann::json& j) {
  IterationState s;
  s.iteration = j.at("iteration").get<int>();
  s.phase = phase_from_string(j.at("phase").get<std::string>());
  for (const auto& [k, a] : j.at("artifacts").items())
    s.artifacts[k] = {a.at("path").get<std::string>(), a.at("hash").get<std::string>()};
  s.counters = j.value("counters", std::map<std::string, std::size_t>{});
  if (s.iteration < 1) throw ValidationError("iteration must be >= 1");
  return s;
}

struct SelfplayBackends {
  BackendPtr generator;
  BackendPtr solver;  // also serves as judge
};

struct SelfplayHooks {
  // Called at phase checkpoints and after each probed task in phase (b);
  // throwing simulates a crash.
  std::function<void(int iteration, Phase phase, std::size_t progress)> on_progress;
};

struct SelfplayResult {
  std::vector<nlohmann::json> reports;
  IterationState final_state;
};

namespace detail {

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IngestionError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Write to a temp file then rename so a crash never leaves a torn artifact.
inline void write_file_atomic(const std::filesystem::path& p, const std::string& bytes) {
  std::filesystem::create_directories(p.parent_path());
  const auto tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << bytes;
    if (!out) throw IngestionError("cannot write " + tmp);
  }
  std::filesystem::rename(tmp, p);
}

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace detail

/// Runs Algorithm-1 style iterations with reward serving in phases (a) and
/// (c) and dataset construction in (b). All artifacts live under `run_dir`;
/// state.json is rewritten after each phase and used to resume.
class SelfplayRunner {
 public:
  SelfplayRunner(Config cfg, SelfplayBackends backends, std::filesystem::path run_dir, std::uint64_t seed)
      : cfg_(std::move(cfg)), backends_(std::move(backends)), dir_(std::move(run_dir)), seed_(seed),
        prompts_(cfg_.prompts()) {
    cfg_.validate();
    service_ = std::make_unique<RewardService>(cfg_.reward, cfg_.gateway, backends_.solver, backends_.solver, prompts_,
                                               cfg_.service.threads);
  }

  SelfplayResult run(const SelfplayHooks& hooks = {}) {
    SelfplayResult res;
    std::filesystem::create_directories(dir_);
    IterationState st = load_state();
    while (st.iteration <= cfg_.selfplay.iterations) {
      if (st.phase == Phase::generator_training) {
        phase_generator(st, hooks);
        st.phase = Phase::dataset_construction;
        save_state(st);
      }
      if (st.phase == Phase::dataset_construction) {
        phase_dataset(st, hooks);
        st.phase = Phase::solver_training;
        save_state(st);
      }
      if (st.phase == Phase::solver_training) {
        phase_solver(st, hooks);
        write_report(st);
        ++st.iteration;
        st.phase = st.iteration <= cfg_.selfplay.iterations ? Phase::generator_training : Phase::done;
        save_state(st);
      }
      if (st.phase == Phase::done) break;
    }
    for (int t = 1; t <= cfg_.selfplay.iterations; ++t) {
      const auto p = dir_ / iter_dir(t) / "report.json";
      if (std::filesystem::exists(p)) res.reports.push_back(nlohmann::json::parse(detail::read_file(p)));
    }
    res.final_state = st;
    return res;
  }

  static std::string iter_dir(int t) { return "iter_" + std::to_string(t); }

 private:
  std::uint64_t iteration_seed(int t, std::uint64_t salt) const {
    return mix64(seed_ ^ mix64(static_cast<std::uint64_t>(t) * 0x100000001B3ull + salt));
  }

  IterationState load_state() const {
    const auto p = dir_ / "state.json";
    if (!std::filesystem::exists(p)) {
      IterationState s;
      if (cfg_.selfplay.iterations < 1) s.phase = Phase::done;
      return s;
    }
    IterationState s = iteration_state_from_json(nlohmann::json::parse(detail::read_file(p)));
    for (const auto& [name, a] : s.artifacts) {
      const auto f = dir_ / a.path;
      if (!std::filesystem::exists(f) || content_hash(detail::read_file(f)) != a.hash)
        throw ValidationError("checkpoint artifact " + name + " is missing or modified: " + f.string());
    }
    return s;
  }

  void save_state(const IterationState& s) const {
    detail::write_file_atomic(dir_ / "state.json", to_json(s).dump(2) + "\n");
  }

  void put_artifact(IterationState& st, const std::string& name, const std::string& rel, const std::string& bytes) {
    detail::write_file_atomic(dir_ / rel, bytes);
    st.artifacts[name] = {rel, content_hash(bytes)};
  }

  // (a) Generator reward serving: rollouts at the training temperature,
  // scored against the frozen solver.
  void phase_generator(IterationState& st, const SelfplayHooks& hooks) {
    const int t = st.iteration;
    const std::size_t n = cfg_.selfplay.generator_batch;
    const std::uint64_t seed = iteration_seed(t, 1);
    std::vector<ItemResult> results(n);
    std::vector<TaskSpec> specs(n);
    parallel_for(n, cfg_.service.threads, [&](std::size_t i) {
      specs[i] = sample_spec_at(cfg_.taskspec, seed, i);
      try {
        const std::string c = backends_.generator
                                  ->complete(render_generator_prompt(specs[i], prompts_), 1,
                                             {cfg_.gateway.rollout_temperature, cfg_.gateway.rollout_max_tokens, i})
                                  .at(0);
        results[i] = service_->score_item(Role::generator, {{"completion", c}}, cfg_.reward);
      } catch (const std::exception& e) {
        results[i].ok = false;
        results[i].breakdown = RewardService::zero_breakdown(Role::generator);
        results[i].diagnostics = {e.what()};
      }
    });
    std::string lines;
    for (std::size_t i = 0; i < n; ++i) {
      nlohmann::json j = to_json(results[i], i);
      nlohmann::json spec;
      to_json(spec, specs[i]);
      j["spec"] = spec;
      lines += dump_line(j) + "\n";
    }
    put_artifact(st, "generator_rewards_" + std::to_string(t), iter_dir(t) + "/generator_rewards.lines", lines);
    st.counters["generator_items_" + std::to_string(t)] = n;
    if (hooks.on_progress) hooks.on_progress(t, Phase::generator_training, n);
  }

  // (b) Dataset construction from the frozen generator.
  void phase_dataset(IterationState& st, const SelfplayHooks& hooks) {
    const int t = st.iteration;
    CurationConfig cc = cfg_.curation;
    cc.seed = iteration_seed(t, 2);
    const std::string pool_rel = iter_dir(t) + "/pool.lines";
    std::vector<PoolEntry> pool;
    if (auto it = st.artifacts.find("pool_" + std::to_string(t)); it != st.artifacts.end()) {
      pool = read_pool_file(dir_ / pool_rel);
    } else {
      pool = synthesize_pool(*backends_.generator, cfg_.taskspec, iteration_seed(t, 3), cc.pool_size,
                             cfg_.gateway.rollout_temperature, cfg_.gateway.rollout_max_tokens, cc.threads, prompts_);
      std::string lines;
      for (const auto& e : pool) lines += dump_line(to_json(e)) + "\n";
      put_artifact(st, "pool_" + std::to_string(t), pool_rel, lines);
      save_state(st);
    }
    if (hooks.on_progress) hooks.on_progress(t, Phase::dataset_construction, 0);

    ProbeJournal journal(dir_ / iter_dir(t) / "probe_journal.lines");
    CurationHooks ch;
    ch.journal = &journal;
    if (hooks.on_progress) ch.after_probe = [&](std::size_t k) { hooks.on_progress(t, Phase::dataset_construction, k); };
    std::size_t positive = 0;
    for (const auto& dw : cfg_.taskspec.domain_weights)
      if (dw.second > 0.0) ++positive;
    CurationResult cr = curate_pool(pool, *backends_.solver, cc, positive, ch, prompts_);

    put_artifact(st, "dataset_" + std::to_string(t), iter_dir(t) + "/dataset.lines", dataset_text(cr.dataset));
    nlohmann::json stats = to_json(cr.stats);
    const auto means = segment_means(cr.dataset);
    stats["segment_mean_p_pass"] = {means[0], means[1], means[2]};
    stats["warnings"] = cr.warnings;
    put_artifact(st, "curation_" + std::to_string(t), iter_dir(t) + "/curation.json", stats.dump(2) + "\n");
    st.counters["dataset_size_" + std::to_string(t)] = cr.dataset.size();
  }

  // (c) Solver reward serving over the curated data in curriculum order.
  void phase_solver(IterationState& st, const SelfplayHooks& hooks) {
    const int t = st.iteration;
    const auto dataset = read_dataset_file(dir_ / iter_dir(t) / "dataset.lines");
    const int rollouts = std::max(1, cfg_.selfplay.solver_rollouts);
    const std::size_t n = dataset.size() * static_cast<std::size_t>(rollouts);
    std::vector<ItemResult> results(n);
    parallel_for(n, cfg_.service.threads, [&](std::size_t i) {
      const auto& rec = dataset[i / static_cast<std::size_t>(rollouts)];
      const std::uint64_t slot = i % static_cast<std::size_t>(rollouts);
      try {
        const std::string c =
            backends_.solver
                ->complete(render_solver_prompt(rec.task.question, rec.task.tools, prompts_), 1,
                           {cfg_.gateway.rollout_temperature, cfg_.gateway.rollout_max_tokens, slot})
                .at(0);
        results[i] = service_->score_solver(c, rec.task.gold_calls, cfg_.reward);
      } catch (const std::exception& e) {
        results[i].ok = false;
        results[i].breakdown = RewardService::zero_breakdown(Role::solver);
        results[i].diagnostics = {e.what()};
      }
    });
    std::string lines;
    for (std::size_t i = 0; i < n; ++i) {
      nlohmann::json j = to_json(results[i], i);
      j["curriculum_rank"] = dataset[i / static_cast<std::size_t>(rollouts)].curriculum_rank;
      lines += dump_line(j) + "\n";
    }
    put_artifact(st, "solver_rewards_" + std::to_string(t), iter_dir(t) + "/solver_rewards.lines", lines);
    st.counters["solver_items_" + std::to_string(t)] = n;
    if (hooks.on_progress) hooks.on_progress(t, Phase::solver_training, n);
  }

  /// Report means are recomputed from the per-item logs on disk.
  void write_report(IterationState& st) {
    const int t = st.iteration;
    auto read_lines = [&](const std::string& rel) {
      std::vector<nlohmann::json> out;
      std::istringstream in(detail::read_file(dir_ / rel));
      std::string line;
      while (std::getline(in, line))
        if (!line.empty()) out.push_back(nlohmann::json::parse(line));
      return out;
    };
    auto means = [](const std::vector<nlohmann::json>& rows, std::initializer_list<const char*> keys) {
      nlohmann::json m = nlohmann::json::object();
      for (const char* k : keys) {
        std::vector<double> v;
        for (const auto& r : rows) v.push_back(r.at("breakdown").at(k).get<double>());
        m[k] = detail::mean_of(v);
      }
      std::vector<double> tot;
      for (const auto& r : rows) tot.push_back(r.at("total").get<double>());
      m["total"] = detail::mean_of(tot);
      return m;
    };
    const auto gen = read_lines(iter_dir(t) + "/generator_rewards.lines");
    const auto sol = read_lines(iter_dir(t) + "/solver_rewards.lines");
    const auto curation = nlohmann::json::parse(detail::read_file(dir_ / iter_dir(t) / "curation.json"));
    nlohmann::json report = {
        {"iteration", t},
        {"generator", {{"items", gen.size()},
                       {"means", means(gen, {"fmt", "valid", "diff", "sem", "curr", "total_raw", "total_normalized"})}}},
        {"dataset", curation},
        {"solver", {{"items", sol.size()}, {"means", means(sol, {"fmt", "acc"})}}}};
    put_artifact(st, "report_" + std::to_string(t), iter_dir(t) + "/report.json", report.dump(2) + "\n");
  }

  Config cfg_;
  SelfplayBackends backends_;
  std::filesystem::path dir_;
  std::uint64_t seed_;
  PromptBundle prompts_;
  std::unique_ptr<RewardService> service_;
};

}  // namespace toolplay
