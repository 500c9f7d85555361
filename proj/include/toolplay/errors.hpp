#pragma once

#include <stdexcept>
#include <string>

namespace toolplay {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TemplateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Transport or protocol failure talking to a model backend.
struct BackendError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scripted backend asked for a prompt it has no transcript for.
struct FixtureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ProbeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CurationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IngestionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed reward-service request envelope (HTTP 400).
struct RequestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace toolplay
