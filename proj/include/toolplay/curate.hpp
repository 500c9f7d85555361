#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "toolplay/errors.hpp"
#include "toolplay/gateway.hpp"
#include "toolplay/genreward.hpp"
#include "toolplay/hash.hpp"
#include "toolplay/parallel.hpp"
#include "toolplay/parse.hpp"
#include "toolplay/rng.hpp"
#include "toolplay/taskspec.hpp"

namespace toolplay {

enum class Bucket { easy = 0, medium = 1, hard = 2 };

inline std::string_view to_string(Bucket b) {
  switch (b) {
    case Bucket::easy: return "easy";
    case Bucket::medium: return "medium";
    case Bucket::hard: return "hard";
  }
  return "hard";
}

inline Bucket bucket_from_string(std::string_view s) {
  if (s == "easy") return Bucket::easy;
  if (s == "medium") return Bucket::medium;
  if (s == "hard") return Bucket::hard;
  throw ValidationError("unknown bucket '" + std::string(s) + "'");
}

struct CurationConfig {
  std::size_t pool_size = 10000;
  std::size_t output_size = 2000;
  double agreement_threshold = 0.125;
  double easy_threshold = 0.75;  // p_pass >= easy_threshold -> easy
  double hard_threshold = 0.25;  // p_pass < hard_threshold -> hard
  // Fraction of output_size any one domain may occupy; 0 means 2x the
  // uniform share over the configured domains.
  double domain_cap_fraction = 0.0;
  std::array<double, 3> mix = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  double segment_dominant = 0.8;
  bool reuse_probe_samples = true;
  bool require_structural = true;
  ProbeParams probe;
  int threads = 4;
  std::uint64_t seed = 0;

  void validate() const {
    if (output_size == 0) throw ConfigError("output_size must be positive");
    if (output_size > pool_size) throw ConfigError("output_size must not exceed pool_size");
    if (!(agreement_threshold >= 0.0 && agreement_threshold <= 1.0))
      throw ConfigError("agreement_threshold must lie in [0,1]");
    if (!(hard_threshold >= 0.0 && hard_threshold <= easy_threshold && easy_threshold <= 1.0))
      throw ConfigError("bucket thresholds need 0 <= hard <= easy <= 1");
    if (domain_cap_fraction < 0.0 || domain_cap_fraction > 1.0)
      throw ConfigError("domain_cap_fraction must lie in [0,1]");
    double s = 0.0;
    for (double m : mix) {
      if (m < 0.0) throw ConfigError("bucket mix must be non-negative");
      s += m;
    }
    if (std::fabs(s - 1.0) > 1e-9) throw ConfigError("bucket mix must sum to 1");
    if (!(segment_dominant >= 0.0 && segment_dominant <= 1.0)) throw ConfigError("segment_dominant must lie in [0,1]");
    if (probe.k < 1) throw ConfigError("probe k must be >= 1");
  }
};

struct CuratedRecord {
  GeneratedTask task;
  TaskSpec spec;
  std::string signature;
  double agreement = 0.0;
  double p_pass = 0.0;
  Bucket bucket = Bucket::hard;
  std::size_t curriculum_rank = 0;
  std::size_t pool_index = 0;
};

/// Dataset line. Keys come out sorted because nlohmann::json objects are ordered maps.
inline nlohmann::json to_json(const CuratedRecord& r) {
  nlohmann::json spec;
  to_json(spec, r.spec);
  return {{"question", r.task.question},
          {"tools", to_json(r.task.tools)},
          {"gold_calls", to_json(r.task.gold_calls)},
          {"domain", r.spec.domain},
          {"spec", spec},
          {"p_pass", r.p_pass},
          {"bucket", std::string(to_string(r.bucket))},
          {"curriculum_rank", r.curriculum_rank}};
}

inline CuratedRecord curated_record_from_json(const nlohmann::json& j) {
  CuratedRecord r;
  r.task.question = j.at("question").get<std::string>();
  r.task.tools = tools_from_json(j.at("tools"));
  r.task.gold_calls = calls_from_json(j.at("gold_calls"));
  r.spec = j.at("spec").get<TaskSpec>();
  r.p_pass = j.at("p_pass").get<double>();
  r.bucket = bucket_from_string(j.at("bucket").get<std::string>());
  r.curriculum_rank = j.at("curriculum_rank").get<std::size_t>();
  return r;
}

inline std::string dump_line(const nlohmann::json& j) {
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

/// Canonical dedup signature: lowercased whitespace-collapsed question,
/// sorted tool names, canonical gold-call serialization.
inline std::string task_signature(const GeneratedTask& t) {
  std::string q = normalize_whitespace(t.question);
  for (char& c : q) c = detail::ascii_lower(c);
  std::vector<std::string> names;
  for (const auto& tool : t.tools) names.push_back(tool.name);
  std::sort(names.begin(), names.end());
  const nlohmann::json key = {q, names, canonical_string(t.gold_calls)};
  return content_hash(key.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace));
}

/// First occurrence of each signature survives, order preserved.
inline std::vector<GeneratedTask> dedup(const std::vector<GeneratedTask>& pool) {
  std::set<std::string> seen;
  std::vector<GeneratedTask> out;
  for (const auto& t : pool)
    if (seen.insert(task_signature(t)).second) out.push_back(t);
  return out;
}

inline Bucket bucketize(double p_pass, const CurationConfig& cfg = {}) {
  if (p_pass >= cfg.easy_threshold) return Bucket::easy;
  if (p_pass >= cfg.hard_threshold) return Bucket::medium;
  return Bucket::hard;
}

struct VerifyResult {
  double agreement = 0.0;
  double p_pass = 0.0;
  bool keep = false;
  std::optional<std::string> error;
};

/// Solver agreement with gold (closed lower bound on the threshold) plus the
/// pass@K estimate, from one shared probe batch unless configured otherwise.
inline VerifyResult cross_verify(const GeneratedTask& task, ModelBackend& solver, const CurationConfig& cfg,
                                 const PromptBundle& prompts = PromptBundle::defaults()) {
  VerifyResult v;
  try {
    ProbeResult agree = probe_solver(solver, task.question, task.tools, task.gold_calls, cfg.probe, prompts, 0);
    v.agreement = agree.p_succ;
    if (cfg.reuse_probe_samples) {
      v.p_pass = agree.p_succ;
    } else {
      ProbeResult pass = probe_solver(solver, task.question, task.tools, task.gold_calls, cfg.probe, prompts,
                                      static_cast<std::uint64_t>(cfg.probe.k));
      v.p_pass = pass.p_succ;
    }
    v.keep = v.agreement >= cfg.agreement_threshold;
  } catch (const std::exception& e) {
    v.keep = false;
    v.error = e.what();
  }
  return v;
}

namespace detail {

// Largest-remainder apportionment of `total` over `weights` (ties to lower index).
inline std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& weights) {
  std::vector<std::size_t> out(weights.size(), 0);
  double sum = 0.0;
  for (double w : weights) sum += w;
  if (sum <= 0.0 || total == 0) return out;
  std::vector<std::pair<double, std::size_t>> rema;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = static_cast<double>(total) * weights[i] / sum;
    out[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += out[i];
    rema.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total && k < rema.size(); ++k, ++assigned) ++out[rema[k].second];
  return out;
}

inline std::uint64_t order_key(std::uint64_t seed, const std::string& signature, std::uint64_t salt) {
  return mix64(fnv1a64(signature, mix64(seed ^ (salt * 0x9E3779B97F4A7C15ull))));
}

}  // namespace detail

struct Selection {
  std::vector<CuratedRecord> dataset;
  std::vector<std::string> warnings;
};

/// Domain-capped, bucket-mixed selection followed by curriculum ordering:
/// thirds of the output, each led by one bucket (easy, medium, hard) at the
/// configured dominant share, shuffled within a segment, then repaired so
/// mean p_pass never rises from one third to the next.
inline Selection select_and_order(std::vector<CuratedRecord> verified, const CurationConfig& cfg,
                                  std::size_t num_domains = 0) {
  if (verified.empty()) throw CurationError("no verified records to select from");
  Selection sel;

  if (num_domains == 0) {
    std::set<std::string> ds;
    for (const auto& r : verified) ds.insert(r.spec.domain);
    num_domains = ds.size();
  }
  const double cap_fraction = cfg.domain_cap_fraction > 0.0 ? cfg.domain_cap_fraction
                                                            : std::min(1.0, 2.0 / static_cast<double>(num_domains));
  const std::size_t cap =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(cap_fraction * static_cast<double>(cfg.output_size) + 1e-9)));

  // Candidates per bucket in a seeded order.
  std::array<std::vector<CuratedRecord>, 3> cand;
  for (auto& r : verified) cand[static_cast<int>(r.bucket)].push_back(std::move(r));
  for (auto& c : cand)
    std::sort(c.begin(), c.end(), [&](const CuratedRecord& a, const CuratedRecord& b) {
      const auto ka = detail::order_key(cfg.seed, a.signature, 1), kb = detail::order_key(cfg.seed, b.signature, 1);
      return ka != kb ? ka < kb : a.pool_index < b.pool_index;
    });

  const std::size_t available = cand[0].size() + cand[1].size() + cand[2].size();
  const std::size_t want = std::min(cfg.output_size, available);
  std::vector<std::size_t> target = detail::apportion(cfg.output_size, {cfg.mix[0], cfg.mix[1], cfg.mix[2]});

  std::map<std::string, std::size_t> per_domain;
  std::array<std::size_t, 3> cursor{0, 0, 0};
  std::array<std::vector<CuratedRecord>, 3> chosen;
  std::size_t total = 0;

  auto take_one = [&](int b) {
    auto& c = cand[b];
    while (cursor[b] < c.size()) {
      CuratedRecord& r = c[cursor[b]++];
      if (per_domain[r.spec.domain] >= cap) continue;
      ++per_domain[r.spec.domain];
      chosen[b].push_back(std::move(r));
      ++total;
      return true;
    }
    return false;
  };

  // Round-robin over buckets toward the mix targets, then fill any shortfall
  // from whatever buckets still have supply.
  for (bool progress = true; progress && total < want;) {
    progress = false;
    for (int b = 0; b < 3 && total < want; ++b)
      if (chosen[b].size() < target[b] && take_one(b)) progress = true;
  }
  bool shortfall_filled = false;
  for (bool progress = true; progress && total < want;) {
    progress = false;
    for (int b = 0; b < 3 && total < want; ++b)
      if (take_one(b)) progress = shortfall_filled = true;
  }
  if (shortfall_filled) sel.warnings.push_back("bucket mix not satisfiable; filled from other buckets");
  if (total < cfg.output_size)
    sel.warnings.push_back("shortage: selected " + std::to_string(total) + " of " + std::to_string(cfg.output_size) +
                           " requested records");

  // Segment sizes: boundaries at ceil(N/3), ceil(2N/3).
  const std::size_t n = total;
  const std::array<std::size_t, 4> bound{0, (n + 2) / 3, (2 * n + 2) / 3, n};
  std::array<std::size_t, 3> seg_size{};
  for (int k = 0; k < 3; ++k) seg_size[k] = bound[k + 1] - bound[k];

  std::array<std::size_t, 3> left{chosen[0].size(), chosen[1].size(), chosen[2].size()};
  std::array<std::array<std::size_t, 3>, 3> quota{};
  for (int k = 0; k < 3; ++k) {
    const auto dom = static_cast<std::size_t>(std::llround(cfg.segment_dominant * static_cast<double>(seg_size[k])));
    quota[k][k] = std::min({dom, left[k], seg_size[k]});
    left[k] -= quota[k][k];
  }
  // Non-dominant slots: nearest harder bucket first, then the rest.
  const std::array<std::array<int, 3>, 3> prefs{{{1, 2, 0}, {2, 0, 1}, {1, 0, 2}}};
  for (int k = 0; k < 3; ++k) {
    std::size_t need = seg_size[k] - quota[k][k];
    for (int b : prefs[k]) {
      const std::size_t t = std::min(need, left[b]);
      quota[k][b] += t;
      left[b] -= t;
      need -= t;
    }
  }

  std::array<std::vector<CuratedRecord>, 3> seg;
  std::array<std::size_t, 3> pos{0, 0, 0};
  for (int k = 0; k < 3; ++k)
    for (int b = 0; b < 3; ++b)
      for (std::size_t i = 0; i < quota[k][b]; ++i) seg[k].push_back(std::move(chosen[b][pos[b]++]));

  auto mean = [](const std::vector<CuratedRecord>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (const auto& r : v) s += r.p_pass;
    return s / static_cast<double>(v.size());
  };
  // Swap-repair: exchange the hardest record of an earlier third with the
  // easiest of the next until means are non-increasing.
  for (bool changed = true; changed;) {
    changed = false;
    for (int k = 0; k + 1 < 3; ++k) {
      while (!seg[k].empty() && !seg[k + 1].empty() && mean(seg[k]) < mean(seg[k + 1])) {
        auto lo = std::min_element(seg[k].begin(), seg[k].end(),
                                   [](const auto& a, const auto& b) { return a.p_pass < b.p_pass; });
        auto hi = std::max_element(seg[k + 1].begin(), seg[k + 1].end(),
                                   [](const auto& a, const auto& b) { return a.p_pass < b.p_pass; });
        if (!(lo->p_pass < hi->p_pass)) break;
        std::swap(*lo, *hi);
        changed = true;
      }
    }
  }

  for (int k = 0; k < 3; ++k) {
    std::sort(seg[k].begin(), seg[k].end(), [&](const CuratedRecord& a, const CuratedRecord& b) {
      const auto ka = detail::order_key(cfg.seed, a.signature, 2), kb = detail::order_key(cfg.seed, b.signature, 2);
      return ka != kb ? ka < kb : a.pool_index < b.pool_index;
    });
    for (auto& r : seg[k]) {
      r.curriculum_rank = sel.dataset.size();
      sel.dataset.push_back(std::move(r));
    }
  }
  return sel;
}

/// Mean p_pass of each curriculum third (same boundaries as select_and_order).
inline std::array<double, 3> segment_means(const std::vector<CuratedRecord>& dataset) {
  const std::size_t n = dataset.size();
  const std::array<std::size_t, 4> bound{0, (n + 2) / 3, (2 * n + 2) / 3, n};
  std::array<double, 3> out{};
  for (int k = 0; k < 3; ++k) {
    double s = 0.0;
    for (std::size_t i = bound[k]; i < bound[k + 1]; ++i) s += dataset[i].p_pass;
    out[k] = bound[k + 1] > bound[k] ? s / static_cast<double>(bound[k + 1] - bound[k]) : 0.0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pool synthesis and the end-to-end pipeline.

struct PoolEntry {
  std::size_t index = 0;
  TaskSpec spec;
  std::string completion;
};

inline nlohmann::json to_json(const PoolEntry& e) {
  nlohmann::json spec;
  to_json(spec, e.spec);
  return {{"index", e.index}, {"spec", spec}, {"completion", e.completion}};
}

inline PoolEntry pool_entry_from_json(const nlohmann::json& j) {
  PoolEntry e;
  e.index = j.at("index").get<std::size_t>();
  e.spec = j.at("spec").get<TaskSpec>();
  e.completion = j.at("completion").get<std::string>();
  return e;
}

/// One generator completion per pool slot i, prompted with spec draw i of
/// the seeded stream and requested at sample slot i.
inline std::vector<PoolEntry> synthesize_pool(ModelBackend& generator, const SpecDistribution& dist,
                                              std::uint64_t seed, std::size_t pool_size, double temperature = 1.0,
                                              int max_tokens = 2048, int threads = 4,
                                              const PromptBundle& prompts = PromptBundle::defaults()) {
  dist.validate();
  std::vector<PoolEntry> pool(pool_size);
  parallel_for(pool_size, threads, [&](std::size_t i) {
    PoolEntry& e = pool[i];
    e.index = i;
    e.spec = sample_spec_at(dist, seed, i);
    const std::string prompt = render_generator_prompt(e.spec, prompts);
    e.completion = generator.complete(prompt, 1, DecodeParams{temperature, max_tokens, i}).at(0);
  });
  return pool;
}

inline std::vector<PoolEntry> read_pool_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open pool file " + path.string());
  std::vector<PoolEntry> out;
  std::string line;
  std::vector<std::size_t> bad;
  for (std::size_t ln = 1; std::getline(in, line); ++ln) {
    if (trim(line).empty()) continue;
    try {
      out.push_back(pool_entry_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception&) {
      bad.push_back(ln);
    }
  }
  if (!bad.empty()) {
    std::string msg = "malformed pool lines:";
    for (auto b : bad) msg += " " + std::to_string(b);
    throw IngestionError(path.string() + ": " + msg);
  }
  return out;
}

struct CurationStats {
  std::size_t pool = 0;
  std::size_t parsed = 0;
  std::size_t structural = 0;
  std::size_t unique = 0;
  std::size_t verified = 0;
  std::size_t probe_errors = 0;
  std::array<std::size_t, 3> verified_buckets{0, 0, 0};
  std::array<std::size_t, 3> output_buckets{0, 0, 0};
};

inline nlohmann::json to_json(const CurationStats& s) {
  auto hist = [](const std::array<std::size_t, 3>& h) {
    return nlohmann::json{{"easy", h[0]}, {"medium", h[1]}, {"hard", h[2]}};
  };
  return {{"pool", s.pool},
          {"parsed", s.parsed},
          {"structural", s.structural},
          {"unique", s.unique},
          {"verified", s.verified},
          {"probe_errors", s.probe_errors},
          {"verified_buckets", hist(s.verified_buckets)},
          {"output_buckets", hist(s.output_buckets)}};
}

struct CurationResult {
  std::vector<CuratedRecord> dataset;
  std::vector<std::string> warnings;
  CurationStats stats;
};

/// Append-only probe journal keyed by dedup signature, so an interrupted
/// run can resume without re-probing. Torn trailing lines are ignored.
class ProbeJournal {
 public:
  ProbeJournal() = default;
  explicit ProbeJournal(std::filesystem::path path) : path_(std::move(path)) {
    std::ifstream in(path_, std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
      try {
        const auto j = nlohmann::json::parse(line);
        VerifyResult v;
        v.agreement = j.at("agreement").get<double>();
        v.p_pass = j.at("p_pass").get<double>();
        v.keep = j.at("keep").get<bool>();
        if (j.contains("error") && j["error"].is_string()) v.error = j["error"].get<std::string>();
        done_[j.at("signature").get<std::string>()] = v;
      } catch (const std::exception&) {
      }
    }
  }

  std::optional<VerifyResult> find(const std::string& sig) const {
    std::lock_guard lock(mu_);
    auto it = done_.find(sig);
    if (it == done_.end()) return std::nullopt;
    return it->second;
  }

  void record(const std::string& sig, const VerifyResult& v) {
    std::lock_guard lock(mu_);
    done_[sig] = v;
    if (path_.empty()) return;
    nlohmann::json j = {{"signature", sig}, {"agreement", v.agreement}, {"p_pass", v.p_pass}, {"keep", v.keep}};
    j["error"] = v.error ? nlohmann::json(*v.error) : nlohmann::json(nullptr);
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    out << dump_line(j) << '\n';
    out.flush();
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return done_.size();
  }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::map<std::string, VerifyResult> done_;
};

struct CurationHooks {
  ProbeJournal* journal = nullptr;
  // Called after each newly probed task with the running count; throwing
  // simulates a crash mid-phase.
  std::function<void(std::size_t)> after_probe;
};

/// Parse -> structural check -> dedup -> cross-verify/pass@K -> bucket ->
/// select and order.
inline CurationResult curate_pool(const std::vector<PoolEntry>& pool, ModelBackend& solver, const CurationConfig& cfg,
                                  std::size_t num_domains = 0, const CurationHooks& hooks = {},
                                  const PromptBundle& prompts = PromptBundle::defaults()) {
  cfg.validate();
  CurationResult res;
  res.stats.pool = pool.size();

  std::vector<CuratedRecord> candidates;
  std::set<std::string> seen;
  for (const auto& e : pool) {
    ParseOutcome o = parse_generator_completion(e.completion);
    if (!o.task) continue;
    ++res.stats.parsed;
    if (cfg.require_structural) {
      if (format_reward(o) != 3) continue;
      ValidityResult v = validity_reward(*o.task);
      if (!v.menu_ok || !v.required_ok) continue;
    }
    ++res.stats.structural;
    CuratedRecord r;
    r.task = std::move(*o.task);
    r.spec = e.spec;
    r.pool_index = e.index;
    r.signature = task_signature(r.task);
    if (!seen.insert(r.signature).second) continue;
    candidates.push_back(std::move(r));
  }
  res.stats.unique = candidates.size();

  std::vector<VerifyResult> verdicts(candidates.size());
  std::mutex count_mu;
  std::size_t probed = 0;
  parallel_for(candidates.size(), cfg.threads, [&](std::size_t i) {
    const auto& r = candidates[i];
    if (hooks.journal) {
      if (auto v = hooks.journal->find(r.signature)) {
        verdicts[i] = *v;
        return;
      }
    }
    verdicts[i] = cross_verify(r.task, solver, cfg, prompts);
    if (hooks.journal) hooks.journal->record(r.signature, verdicts[i]);
    if (hooks.after_probe) {
      std::size_t c;
      {
        std::lock_guard lock(count_mu);
        c = ++probed;
      }
      hooks.after_probe(c);
    }
  });

  std::vector<CuratedRecord> verified;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const VerifyResult& v = verdicts[i];
    if (v.error) {
      ++res.stats.probe_errors;
      res.warnings.push_back("pool item " + std::to_string(candidates[i].pool_index) + " dropped: " + *v.error);
      continue;
    }
    if (!v.keep) continue;
    CuratedRecord r = std::move(candidates[i]);
    r.agreement = v.agreement;
    r.p_pass = v.p_pass;
    r.bucket = bucketize(v.p_pass, cfg);
    ++res.stats.verified_buckets[static_cast<int>(r.bucket)];
    verified.push_back(std::move(r));
  }
  res.stats.verified = verified.size();
  if (verified.empty()) throw CurationError("no task survived verification");

  Selection sel = select_and_order(std::move(verified), cfg, num_domains);
  res.dataset = std::move(sel.dataset);
  for (auto& w : sel.warnings) res.warnings.push_back(std::move(w));
  for (const auto& r : res.dataset) ++res.stats.output_buckets[static_cast<int>(r.bucket)];
  return res;
}

inline std::string dataset_text(const std::vector<CuratedRecord>& dataset) {
  std::string out;
  for (const auto& r : dataset) {
    out += dump_line(to_json(r));
    out += '\n';
  }
  return out;
}

inline std::vector<CuratedRecord> read_dataset_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open dataset file " + path.string());
  std::vector<CuratedRecord> out;
  std::string line;
  for (std::size_t ln = 1; std::getline(in, line); ++ln) {
    if (trim(line).empty()) continue;
    try {
      out.push_back(curated_record_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw IngestionError(path.string() + ": line " + std::to_string(ln) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace toolplay
