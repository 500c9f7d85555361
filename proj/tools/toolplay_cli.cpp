#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "toolplay/remote_backend.hpp"
#include "toolplay/server.hpp"
#include "toolplay/synthetic.hpp"
#include "toolplay/toolplay.hpp"

namespace fs = std::filesystem;
using namespace toolplay;

namespace {

struct Globals {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string format = "lines";
};

Config load(const Globals& g) { return g.config_path.empty() ? Config{} : load_config(g.config_path); }

std::string render(const nlohmann::json& j, const Globals& g) {
  return g.format == "pretty" ? j.dump(2, ' ', false, nlohmann::json::error_handler_t::replace)
                              : j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

// Writes to `path`, or stdout when empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw IngestionError("cannot write " + path);
}

std::vector<nlohmann::json> read_json_lines(const std::string& path) {
  std::ifstream file;
  std::istream* in = &std::cin;
  if (path != "-") {
    file.open(path, std::ios::binary);
    if (!file) throw IngestionError("cannot open " + path);
    in = &file;
  }
  std::vector<nlohmann::json> out;
  std::string line;
  for (std::size_t ln = 1; std::getline(*in, line); ++ln) {
    if (trim(line).empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw IngestionError(path + ": line " + std::to_string(ln) + ": " + e.what());
    }
  }
  return out;
}

RewardServer* g_server = nullptr;
void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-play harness for tool-calling agents: rewards, curation, evaluation."};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--format", g.format, "output format")->check(CLI::IsMember({"lines", "pretty"}));
  app.fallthrough();

  // sample-specs
  auto* sample = app.add_subcommand("sample-specs", "draw task specifications");
  std::size_t sample_count = 10;
  std::uint64_t sample_first = 0;
  sample->add_option("--count,-n", sample_count, "number of specs");
  sample->add_option("--first-index", sample_first, "index of the first draw in the seeded stream");

  // generate
  auto* generate = app.add_subcommand("generate", "synthesize a candidate pool with the generator backend");
  std::string gen_out = "-";
  std::size_t gen_count = 0;
  generate->add_option("--out,-o", gen_out, "pool file (lines)");
  generate->add_option("--count,-n", gen_count, "pool size (default: curation.pool_size)");

  // curate
  auto* curate = app.add_subcommand("curate", "build a curriculum dataset from a pool");
  std::string cur_pool, cur_out = "-", cur_stats, cur_journal;
  std::size_t cur_output = 0;
  curate->add_option("--pool", cur_pool, "pool file from `generate`")->required();
  curate->add_option("--out,-o", cur_out, "dataset file (lines)");
  curate->add_option("--stats", cur_stats, "write curation statistics here");
  curate->add_option("--journal", cur_journal, "probe journal for resumable runs");
  curate->add_option("--output-size", cur_output, "override curation.output_size");

  // score
  auto* score = app.add_subcommand("score", "score a batch file offline");
  std::string score_role, score_in, score_out = "-";
  score->add_option("--role", score_role, "generator | solver")
      ->required()
      ->check(CLI::IsMember({"generator", "solver"}));
  score->add_option("--in,-i", score_in, "items, one {completion, context} per line")->required();
  score->add_option("--out,-o", score_out, "output file");

  // serve
  auto* serve = app.add_subcommand("serve", "run the batch reward service");
  int serve_port = 8080;
  std::string serve_host;
  serve->add_option("--port", serve_port, "port (0 picks a free one)");
  serve->add_option("--host", serve_host, "bind address (default service.host)");

  // selfplay
  auto* selfplay = app.add_subcommand("selfplay", "run self-play iterations with checkpointing");
  std::string sp_dir;
  int sp_iterations = -1;
  selfplay->add_option("--run-dir", sp_dir, "run directory (state.json, per-iteration artifacts)")->required();
  selfplay->add_option("--iterations", sp_iterations, "override selfplay.iterations");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "AST-match evaluation with error taxonomy");
  std::string ev_bench, ev_preds, ev_report = "-";
  evaluate->add_option("--bench", ev_bench, "benchmark items (lines)")->required();
  evaluate->add_option("--preds", ev_preds, "predictions {id, completion} (lines); omit to query the solver");
  evaluate->add_option("--report", ev_report, "report output");

  // make-fixtures (synthetic scripted world for demos)
  auto* fixtures = app.add_subcommand("make-fixtures", "write a synthetic scripted world (generator + solver)");
  std::string fx_dir;
  std::size_t fx_count = 200;
  fixtures->add_option("--dir", fx_dir, "output directory")->required();
  fixtures->add_option("--count,-n", fx_count, "number of generator completions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*sample) {
      const Config cfg = load(g);
      std::string out;
      for (const auto& s : sample_specs(cfg.taskspec, g.seed, sample_count, sample_first)) {
        nlohmann::json j;
        to_json(j, s);
        out += render(j, g) + "\n";
      }
      emit("-", out);
    } else if (*generate) {
      const Config cfg = load(g);
      auto backend = make_backend(cfg.gateway.generator, cfg.gateway.max_in_flight);
      const std::size_t n = gen_count ? gen_count : cfg.curation.pool_size;
      const auto pool = synthesize_pool(*backend, cfg.taskspec, g.seed, n, cfg.gateway.rollout_temperature,
                                        cfg.gateway.rollout_max_tokens, cfg.curation.threads, cfg.prompts());
      std::string out;
      for (const auto& e : pool) out += dump_line(to_json(e)) + "\n";
      emit(gen_out, out);
    } else if (*curate) {
      Config cfg = load(g);
      CurationConfig cc = cfg.curation;
      cc.seed = g.seed;
      if (cur_output) cc.output_size = cur_output;
      const auto pool = read_pool_file(cur_pool);
      cc.pool_size = std::max({cc.pool_size, pool.size(), cc.output_size});
      auto solver = make_backend(cfg.gateway.solver, cfg.gateway.max_in_flight);
      std::unique_ptr<ProbeJournal> journal;
      CurationHooks hooks;
      if (!cur_journal.empty()) {
        journal = std::make_unique<ProbeJournal>(cur_journal);
        hooks.journal = journal.get();
      }
      std::size_t positive = 0;
      for (const auto& dw : cfg.taskspec.domain_weights)
        if (dw.second > 0.0) ++positive;
      CurationResult res = curate_pool(pool, *solver, cc, positive, hooks, cfg.prompts());
      for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
      emit(cur_out, dataset_text(res.dataset));
      if (!cur_stats.empty()) {
        nlohmann::json stats = to_json(res.stats);
        const auto m = segment_means(res.dataset);
        stats["segment_mean_p_pass"] = {m[0], m[1], m[2]};
        stats["warnings"] = res.warnings;
        emit(cur_stats, stats.dump(2) + "\n");
      }
    } else if (*score) {
      const Config cfg = load(g);
      const Role role = role_from_string(score_role);
      BackendPtr solver;
      if (role == Role::generator) solver = make_backend(cfg.gateway.solver, cfg.gateway.max_in_flight);
      RewardService svc(cfg.reward, cfg.gateway, solver, solver, cfg.prompts(), cfg.service.threads);
      const auto items = read_json_lines(score_in);
      if (items.empty()) throw IngestionError(score_in + ": no items");
      const auto res = svc.score_batch(role, nlohmann::json{{"items", items}});
      std::string out;
      for (const auto& r : res["results"]) out += render(r, g) + "\n";
      emit(score_out, out);
    } else if (*serve) {
      const Config cfg = load(g);
      BackendPtr solver;
      try {
        solver = make_backend(cfg.gateway.solver, cfg.gateway.max_in_flight);
      } catch (const std::exception& e) {
        std::cerr << "warning: no solver backend (" << e.what() << "); generator items will fail\n";
      }
      auto svc = std::make_shared<const RewardService>(cfg.reward, cfg.gateway, solver, solver, cfg.prompts(),
                                                       cfg.service.threads);
      RewardServer server(svc);
      const std::string host = serve_host.empty() ? cfg.service.host : serve_host;
      const int port = server.bind(host, serve_port);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "port " << port << "\n" << "ready: listening on http://" << host << ":" << port << std::endl;
      server.listen();
      g_server = nullptr;
    } else if (*selfplay) {
      Config cfg = load(g);
      if (sp_iterations >= 0) cfg.selfplay.iterations = sp_iterations;
      SelfplayBackends b{make_backend(cfg.gateway.generator, cfg.gateway.max_in_flight),
                         make_backend(cfg.gateway.solver, cfg.gateway.max_in_flight)};
      SelfplayRunner runner(cfg, b, sp_dir, g.seed);
      const auto res = runner.run();
      std::string out;
      for (const auto& r : res.reports) out += render(r, g) + "\n";
      emit("-", out);
    } else if (*evaluate) {
      const Config cfg = load(g);
      EvalReport rep;
      if (!ev_preds.empty()) {
        rep = evaluate_file(ev_bench, ev_preds);
      } else {
        auto solver = make_backend(cfg.gateway.solver, cfg.gateway.max_in_flight);
        rep = evaluate_with_backend(read_benchmark_file(ev_bench), *solver, cfg.prompts(), cfg.service.threads,
                                    cfg.gateway.rollout_max_tokens);
      }
      emit(ev_report, render(to_json(rep), g) + "\n");
    } else if (*fixtures) {
      const Config cfg = load(g);
      const auto world = synthetic::make_world(cfg.taskspec, g.seed, fx_count, cfg.gateway.probe.k, cfg.prompts());
      emit((fs::path(fx_dir) / "generator" / "transcripts.json").string(), world.generator->to_json().dump(1) + "\n");
      emit((fs::path(fx_dir) / "solver" / "transcripts.json").string(), world.solver->to_json().dump(1) + "\n");
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
