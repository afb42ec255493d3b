#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "dualtrack/agents.hpp"

namespace dualtrack {

struct RoleEndpoint {
  std::string model;
  std::string system_prompt;
};

struct HttpBackendConfig {
  // e.g. "http://localhost:8000"; requests go to <base_url>/v1/chat/completions.
  std::string base_url;
  std::string api_key;
  RoleEndpoint decomposer;
  RoleEndpoint evaluator;
  double timeout_seconds = 60.0;
  // Extra attempts after a transient failure (transport error, 429, 5xx).
  int transport_retries = 1;
};

// OpenAI-compatible chat-completion client. Every call opens its own
// connection, so one instance can be shared by concurrent workers.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config);

  AgentReply complete(Role role, std::string_view prompt, const DecodeParams& params) override;

  // Request body for one call; exposed for tests.
  nlohmann::json request_body(Role role, std::string_view prompt, const DecodeParams& params) const;

  // Reads choices[0].message.content and usage; token counts fall back to
  // estimates of the request texts when usage is absent.
  static AgentReply parse_response(const std::string& body, std::string_view prompt_text);

  const std::string& path() const { return path_; }

 private:
  HttpBackendConfig config_;
  std::string scheme_host_port_;
  std::string path_;
};

}  // namespace dualtrack
