#pragma once

#include <algorithm>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "toolplay/errors.hpp"
#include "toolplay/genreward.hpp"
#include "toolplay/hash.hpp"
#include "toolplay/parse.hpp"
#include "toolplay/prompts.hpp"
#include "toolplay/solreward.hpp"

namespace toolplay {

struct DecodeParams {
  double temperature = 1.0;
  int max_tokens = 2048;
  // First sample slot of the request. Scripted backends start their cyclic
  // replay here, so the same (prompt, slot) always yields the same text.
  std::uint64_t sample_slot = 0;
};

class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  /// Exactly n completions, ordered by sample slot.
  virtual std::vector<std::string> complete(const std::string& prompt, int n, const DecodeParams& params) = 0;
  virtual std::string kind() const = 0;
};

using BackendPtr = std::shared_ptr<ModelBackend>;

inline std::string prompt_hash(std::string_view prompt) { return content_hash(prompt); }

/// Replays recorded completions keyed by prompt hash. A "*" entry, when
/// present, serves prompts that have no transcript of their own.
class ScriptedBackend : public ModelBackend {
 public:
  static constexpr const char* kWildcard = "*";

  ScriptedBackend() = default;

  void add(const std::string& prompt, std::vector<std::string> completions) {
    add_hash(prompt_hash(prompt), std::move(completions));
  }

  void add_hash(const std::string& hash, std::vector<std::string> completions) {
    if (completions.empty()) throw FixtureError("transcript for " + hash + " has no completions");
    auto& slot = table_[hash];
    slot.insert(slot.end(), std::make_move_iterator(completions.begin()), std::make_move_iterator(completions.end()));
  }

  void set_default(std::vector<std::string> completions) { add_hash(kWildcard, std::move(completions)); }

  /// Accepts either {hash: [completions]} or a list of
  /// {prompt | prompt_hash, completions}.
  void load_json(const nlohmann::json& j, const std::string& origin = "<json>") {
    try {
      if (j.is_object()) {
        for (const auto& [hash, list] : j.items()) add_hash(hash, list.get<std::vector<std::string>>());
      } else if (j.is_array()) {
        for (const auto& e : j) {
          auto completions = e.at("completions").get<std::vector<std::string>>();
          if (e.contains("prompt"))
            add(e.at("prompt").get<std::string>(), std::move(completions));
          else
            add_hash(e.at("prompt_hash").get<std::string>(), std::move(completions));
        }
      } else {
        throw FixtureError(origin + ": fixture must be an object or a list");
      }
    } catch (const nlohmann::json::exception& e) {
      throw FixtureError(origin + ": " + e.what());
    }
  }

  /// Loads every *.json file in `dir` (sorted by name).
  static std::shared_ptr<ScriptedBackend> from_directory(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw FixtureError("fixture directory not found: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
      if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    auto backend = std::make_shared<ScriptedBackend>();
    for (const auto& f : files) {
      std::ifstream in(f, std::ios::binary);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw FixtureError(f.string() + ": " + e.what());
      }
      backend->load_json(j, f.string());
    }
    return backend;
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [h, list] : table_) j[h] = list;
    return j;
  }

  std::vector<std::string> complete(const std::string& prompt, int n, const DecodeParams& params) override {
    if (n < 1) throw BackendError("scripted backend: n must be >= 1");
    const std::string h = prompt_hash(prompt);
    auto it = table_.find(h);
    if (it == table_.end()) it = table_.find(kWildcard);
    if (it == table_.end()) throw FixtureError("no transcript for prompt hash " + h);
    const auto& list = it->second;
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.push_back(list[(params.sample_slot + static_cast<std::uint64_t>(i)) % list.size()]);
    return out;
  }

  std::string kind() const override { return "scripted"; }
  std::size_t size() const { return table_.size(); }

 private:
  std::map<std::string, std::vector<std::string>> table_;
};

/// Decorator that logs every request (prompt hash, n, decode params).
class RecordingBackend : public ModelBackend {
 public:
  struct Request {
    std::string prompt;
    int n;
    DecodeParams params;
  };

  explicit RecordingBackend(BackendPtr inner) : inner_(std::move(inner)) {}

  std::vector<std::string> complete(const std::string& prompt, int n, const DecodeParams& params) override {
    {
      std::lock_guard lock(mu_);
      log_.push_back({prompt, n, params});
    }
    return inner_->complete(prompt, n, params);
  }

  std::string kind() const override { return inner_->kind(); }

  std::vector<Request> requests() const {
    std::lock_guard lock(mu_);
    return log_;
  }

 private:
  BackendPtr inner_;
  mutable std::mutex mu_;
  std::vector<Request> log_;
};

/// Counting gate shared by all callers of one backend.
class ConcurrencyCap {
 public:
  explicit ConcurrencyCap(int limit) : limit_(limit < 1 ? 1 : limit) {}

  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return in_flight_ < limit_; });
    ++in_flight_;
    peak_ = std::max(peak_, in_flight_);
  }

  void release() {
    {
      std::lock_guard lock(mu_);
      --in_flight_;
    }
    cv_.notify_one();
  }

  int limit() const { return limit_; }
  int peak() const {
    std::lock_guard lock(mu_);
    return peak_;
  }

 private:
  int limit_;
  int in_flight_ = 0;
  int peak_ = 0;
  mutable std::mutex mu_;
  std::condition_variable cv_;
};

class CappedBackend : public ModelBackend {
 public:
  CappedBackend(BackendPtr inner, int max_in_flight)
      : inner_(std::move(inner)), cap_(std::make_shared<ConcurrencyCap>(max_in_flight)) {}

  std::vector<std::string> complete(const std::string& prompt, int n, const DecodeParams& params) override {
    cap_->acquire();
    struct Release {
      ConcurrencyCap* c;
      ~Release() { c->release(); }
    } guard{cap_.get()};
    return inner_->complete(prompt, n, params);
  }

  std::string kind() const override { return inner_->kind(); }
  const ConcurrencyCap& cap() const { return *cap_; }

 private:
  BackendPtr inner_;
  std::shared_ptr<ConcurrencyCap> cap_;
};

struct ProbeParams {
  double temperature = 0.7;
  int max_tokens = 2048;
  int k = 8;
};

struct JudgeParams {
  double temperature = 0.0;
  int max_tokens = 16;
};

struct ProbeSample {
  std::string completion;
  std::optional<std::vector<ToolCall>> calls;
  bool success = false;
  std::vector<std::string> diagnostics;
};

struct ProbeResult {
  std::vector<ProbeSample> samples;
  int successes = 0;
  int k = 0;
  double p_succ = 0.0;
};

/// Draws `params.k` solver completions for the task (slots first_slot ..
/// first_slot + k - 1) and counts strict-oracle matches against gold.
inline ProbeResult probe_solver(ModelBackend& backend, const std::string& question, const std::vector<ToolSpec>& menu,
                                const std::vector<ToolCall>& gold, const ProbeParams& params = {},
                                const PromptBundle& prompts = PromptBundle::defaults(), std::uint64_t first_slot = 0) {
  if (gold.empty()) throw ValidationError("probe_solver needs gold calls");
  if (params.k < 1) throw ConfigError("probe k must be >= 1");
  const std::string prompt = render_solver_prompt(question, menu, prompts);
  std::vector<std::string> completions;
  try {
    completions = backend.complete(prompt, params.k, DecodeParams{params.temperature, params.max_tokens, first_slot});
  } catch (const FixtureError&) {
    throw;
  } catch (const std::exception& e) {
    throw ProbeError(std::string("all probe samples failed: ") + e.what());
  }
  if (completions.size() != static_cast<std::size_t>(params.k))
    throw ProbeError("backend returned " + std::to_string(completions.size()) + " of " + std::to_string(params.k) +
                     " probe samples");
  ProbeResult r;
  r.k = params.k;
  for (auto& c : completions) {
    ProbeSample s;
    ParseOutcome o = parse_solver_completion(c);
    s.calls = o.calls;
    s.diagnostics = std::move(o.diagnostics);
    s.success = o.calls && gold_value_oracle(*o.calls, gold);
    if (s.success) ++r.successes;
    s.completion = std::move(c);
    r.samples.push_back(std::move(s));
  }
  r.p_succ = static_cast<double>(r.successes) / static_cast<double>(r.k);
  return r;
}

/// First integer token in 1..5, if any.
inline std::optional<int> parse_judge_score(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] < '0' || text[i] > '9') {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && text[j] >= '0' && text[j] <= '9') ++j;
    const std::string_view tok = text.substr(i, j - i);
    if (tok.size() == 1 && tok[0] >= '1' && tok[0] <= '5') return tok[0] - '0';
    i = j;
  }
  return std::nullopt;
}

struct JudgeResult {
  int score = 1;
  bool parse_failed = false;
  std::vector<std::string> replies;
};

/// One retry (slot 1) on an unparseable reply, then the floor score 1.
inline JudgeResult judge_semantics(ModelBackend& backend, const std::string& question,
                                   const std::vector<ToolSpec>& menu, const std::vector<ToolCall>& gold,
                                   const JudgeParams& params = {},
                                   const PromptBundle& prompts = PromptBundle::defaults()) {
  const std::string prompt = render_judge_prompt(question, menu, gold, prompts);
  JudgeResult r;
  for (std::uint64_t attempt = 0; attempt < 2; ++attempt) {
    auto replies = backend.complete(prompt, 1, DecodeParams{params.temperature, params.max_tokens, attempt});
    if (replies.empty()) throw BackendError("judge: backend returned no completion");
    r.replies.push_back(replies.front());
    if (auto s = parse_judge_score(replies.front())) {
      r.score = *s;
      return r;
    }
  }
  r.score = 1;
  r.parse_failed = true;
  return r;
}

}  // namespace toolplay
