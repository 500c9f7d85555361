#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "toolplay/errors.hpp"
#include "toolplay/service.hpp"

namespace toolplay {

/// HTTP front end for RewardService:
///   POST /v1/rewards/generator, POST /v1/rewards/solver, GET /v1/health.
class RewardServer {
 public:
  explicit RewardServer(std::shared_ptr<const RewardService> service, int http_threads = 16)
      : service_(std::move(service)) {
    svr_.new_task_queue = [http_threads] { return new httplib::ThreadPool(static_cast<size_t>(http_threads)); };
    svr_.Post("/v1/rewards/generator",
              [this](const httplib::Request& req, httplib::Response& res) { handle(Role::generator, req, res); });
    svr_.Post("/v1/rewards/solver",
              [this](const httplib::Request& req, httplib::Response& res) { handle(Role::solver, req, res); });
    svr_.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
      const nlohmann::json body = {{"status", "ok"}, {"in_flight", in_flight_.load()}, {"served", served_.load()}};
      res.set_content(body.dump(), "application/json");
    });
  }

  ~RewardServer() { stop(); }

  /// Binds (port 0 picks a free port) and serves on a background thread.
  int start(const std::string& host, int port) {
    port_ = port == 0 ? svr_.bind_to_any_port(host) : (svr_.bind_to_port(host, port) ? port : -1);
    if (port_ < 0) throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { svr_.listen_after_bind(); });
    svr_.wait_until_ready();
    return port_;
  }

  /// Serves on the calling thread until stop() is called elsewhere.
  int bind(const std::string& host, int port) {
    port_ = port == 0 ? svr_.bind_to_any_port(host) : (svr_.bind_to_port(host, port) ? port : -1);
    if (port_ < 0) throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
    return port_;
  }
  void listen() { svr_.listen_after_bind(); }

  void stop() {
    if (svr_.is_running()) svr_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }

 private:
  void handle(Role role, const httplib::Request& req, httplib::Response& res) {
    ++in_flight_;
    struct Done {
      std::atomic<int>& c;
      ~Done() { --c; }
    } done{in_flight_};
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception& e) {
      error(res, 400, std::string("request body is not JSON: ") + e.what());
      return;
    }
    try {
      const nlohmann::json out = service_->score_batch(role, body);
      res.set_content(out.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace), "application/json");
      ++served_;
    } catch (const RequestError& e) {
      error(res, 400, e.what());
    } catch (const std::exception& e) {
      error(res, 500, e.what());
    }
  }

  static void error(httplib::Response& res, int status, const std::string& msg) {
    res.status = status;
    res.set_content(nlohmann::json{{"error", msg}}.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace),
                    "application/json");
  }

  std::shared_ptr<const RewardService> service_;
  httplib::Server svr_;
  std::thread thread_;
  int port_ = -1;
  std::atomic<int> in_flight_{0};
  std::atomic<long> served_{0};
};

}  // namespace toolplay
