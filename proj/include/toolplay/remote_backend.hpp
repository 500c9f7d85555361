#pragma once

#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "toolplay/config.hpp"
#include "toolplay/errors.hpp"
#include "toolplay/gateway.hpp"

namespace toolplay {

struct RemoteConfig {
  std::string endpoint;  // http://host:port[/path]
  std::string token;
  std::string model = "solver";
  int max_retries = 3;
  int initial_backoff_ms = 100;
  int max_backoff_ms = 2000;
  int timeout_s = 120;

  /// GATEWAY_ENDPOINT / GATEWAY_TOKEN take precedence over file values.
  void apply_env() {
    if (const char* e = std::getenv("GATEWAY_ENDPOINT"); e && *e) endpoint = e;
    if (const char* t = std::getenv("GATEWAY_TOKEN"); t && *t) token = t;
  }
};

/// Chat-completion client: POST {model, messages, temperature, max_tokens, n},
/// read choices[].message.content.
class RemoteBackend : public ModelBackend {
 public:
  explicit RemoteBackend(RemoteConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.endpoint.empty()) throw ConfigError("remote backend: no endpoint (set GATEWAY_ENDPOINT)");
    std::string rest;
    if (cfg_.endpoint.rfind("http://", 0) == 0) {
      rest = cfg_.endpoint.substr(7);
    } else if (cfg_.endpoint.rfind("https://", 0) == 0) {
      throw ConfigError("remote backend: https endpoints are not supported in this build: " + cfg_.endpoint);
    } else {
      rest = cfg_.endpoint;
    }
    const auto slash = rest.find('/');
    host_port_ = "http://" + rest.substr(0, slash);
    path_ = slash == std::string::npos ? "/v1/chat/completions" : rest.substr(slash);
  }

  std::vector<std::string> complete(const std::string& prompt, int n, const DecodeParams& params) override {
    if (n < 1) throw BackendError("remote backend: n must be >= 1");
    std::vector<std::string> out;
    // Servers may return fewer choices than asked; top up a bounded number of times.
    for (int round = 0; round < 4 && static_cast<int>(out.size()) < n; ++round) {
      auto more = request(prompt, n - static_cast<int>(out.size()), params);
      if (more.empty()) break;
      for (auto& c : more) out.push_back(std::move(c));
    }
    if (static_cast<int>(out.size()) < n)
      throw BackendError(cfg_.endpoint + ": returned " + std::to_string(out.size()) + " of " + std::to_string(n) +
                         " completions");
    out.resize(static_cast<std::size_t>(n));
    return out;
  }

  std::string kind() const override { return "remote"; }
  const std::string& endpoint() const { return cfg_.endpoint; }

 private:
  std::vector<std::string> request(const std::string& prompt, int n, const DecodeParams& params) {
    const nlohmann::json body = {{"model", cfg_.model},
                                 {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
                                 {"temperature", params.temperature},
                                 {"max_tokens", params.max_tokens},
                                 {"n", n}};
    const std::string payload = body.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
    httplib::Headers headers;
    if (!cfg_.token.empty()) headers.emplace("Authorization", "Bearer " + cfg_.token);

    std::string last_error;
    int backoff = cfg_.initial_backoff_ms;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
        backoff = std::min(backoff * 2, cfg_.max_backoff_ms);
      }
      httplib::Client cli(host_port_);
      cli.set_connection_timeout(cfg_.timeout_s, 0);
      cli.set_read_timeout(cfg_.timeout_s, 0);
      auto res = cli.Post(path_, headers, payload, "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) throw BackendError(cfg_.endpoint + ": HTTP " + std::to_string(res->status));
      return parse_choices(res->body);
    }
    throw BackendError(cfg_.endpoint + ": " + last_error + " after " + std::to_string(cfg_.max_retries + 1) +
                       " attempts");
  }

  std::vector<std::string> parse_choices(const std::string& body) const {
    try {
      const auto j = nlohmann::json::parse(body);
      std::vector<std::string> out;
      for (const auto& c : j.at("choices")) out.push_back(c.at("message").at("content").get<std::string>());
      return out;
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(cfg_.endpoint + ": malformed response body (" + e.what() + ")");
    }
  }

  RemoteConfig cfg_;
  std::string host_port_;
  std::string path_;
};

/// Builds the backend a config section describes, wrapped in the shared
/// in-flight cap.
inline BackendPtr make_backend(const BackendConfig& b, int max_in_flight) {
  BackendPtr inner;
  if (b.kind == "scripted") {
    if (b.fixtures.empty()) throw ConfigError("scripted backend needs a fixtures directory");
    inner = ScriptedBackend::from_directory(b.fixtures);
  } else {
    RemoteConfig rc;
    rc.endpoint = b.endpoint;
    rc.token = b.token;
    if (!b.model.empty()) rc.model = b.model;
    rc.max_retries = b.max_retries;
    rc.apply_env();
    inner = std::make_shared<RemoteBackend>(rc);
  }
  return std::make_shared<CappedBackend>(std::move(inner), max_in_flight);
}

}  // namespace toolplay
