#include "dualtrack/http_backend.hpp"

#include <chrono>
#include <cmath>

#include <httplib.h>

namespace dualtrack {

namespace {

constexpr std::size_t kExcerptBytes = 200;

std::string excerpt(const std::string& body) {
  if (body.size() <= kExcerptBytes) return body;
  return body.substr(0, kExcerptBytes) + "...";
}

bool transient_status(int status) { return status == 429 || status >= 500; }

}  // namespace

HttpBackend::HttpBackend(HttpBackendConfig config) : config_(std::move(config)) {
  std::string url = config_.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  auto scheme_end = url.find("://");
  if (url.empty() || scheme_end == std::string::npos) {
    throw Error(ErrorCode::invalid_config, "api_base must look like http://host[:port][/prefix], got '" +
                                               config_.base_url + "'");
  }
  auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  path_ = prefix + "/v1/chat/completions";
  if (config_.timeout_seconds <= 0) throw Error(ErrorCode::invalid_config, "timeout_seconds must be > 0");
  if (config_.transport_retries < 0) throw Error(ErrorCode::invalid_config, "transport_retries must be >= 0");
}

nlohmann::json HttpBackend::request_body(Role role, std::string_view prompt, const DecodeParams& params) const {
  const RoleEndpoint& endpoint = role == Role::decomposer ? config_.decomposer : config_.evaluator;
  nlohmann::json messages = nlohmann::json::array();
  if (!endpoint.system_prompt.empty()) {
    messages.push_back({{"role", "system"}, {"content", endpoint.system_prompt}});
  }
  messages.push_back({{"role", "user"}, {"content", std::string(prompt)}});
  return {
      {"model", endpoint.model},
      {"messages", std::move(messages)},
      {"temperature", params.temperature},
      {"max_tokens", params.max_new_tokens},
  };
}

AgentReply HttpBackend::parse_response(const std::string& body, std::string_view prompt_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(200, excerpt(body), std::string("malformed response body: ") + e.what());
  }
  const nlohmann::json* content = nullptr;
  if (doc.is_object() && doc.contains("choices") && doc["choices"].is_array() && !doc["choices"].empty()) {
    const auto& choice = doc["choices"][0];
    if (choice.is_object() && choice.contains("message") && choice["message"].is_object() &&
        choice["message"].contains("content") && choice["message"]["content"].is_string()) {
      content = &choice["message"]["content"];
    }
  }
  if (content == nullptr) {
    throw BackendError(200, excerpt(body), "response has no choices[0].message.content string");
  }

  AgentReply reply;
  reply.raw_text = content->get<std::string>();
  reply.prompt_tokens = estimate_tokens(prompt_text);
  reply.completion_tokens = estimate_tokens(reply.raw_text);
  if (doc.contains("usage") && doc["usage"].is_object()) {
    const auto& usage = doc["usage"];
    if (usage.contains("prompt_tokens") && usage["prompt_tokens"].is_number_integer()) {
      reply.prompt_tokens = usage["prompt_tokens"].get<std::int64_t>();
    }
    if (usage.contains("completion_tokens") && usage["completion_tokens"].is_number_integer()) {
      reply.completion_tokens = usage["completion_tokens"].get<std::int64_t>();
    }
  }
  return reply;
}

AgentReply HttpBackend::complete(Role role, std::string_view prompt, const DecodeParams& params) {
  params.validate();
  const std::string body = request_body(role, prompt, params).dump();
  const RoleEndpoint& endpoint = role == Role::decomposer ? config_.decomposer : config_.evaluator;
  const std::string prompt_text = endpoint.system_prompt + std::string(prompt);

  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  const auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
  const auto timeout_us = std::chrono::duration_cast<std::chrono::microseconds>(timeout);

  for (int attempt = 0;; ++attempt) {
    const bool last_attempt = attempt >= config_.transport_retries;

    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(timeout_us);
    client.set_read_timeout(timeout_us);
    client.set_write_timeout(timeout_us);

    const auto started = std::chrono::steady_clock::now();
    auto result = client.Post(path_, headers, body, "application/json");
    const auto elapsed = std::chrono::steady_clock::now() - started;

    if (!result) {
      const auto err = result.error();
      const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                             (err == httplib::Error::Read && elapsed >= timeout * 0.95);
      if (!last_attempt) continue;
      if (timed_out) {
        throw Error(ErrorCode::timeout, "request to " + scheme_host_port_ + path_ + " timed out");
      }
      throw BackendError(0, "", "request to " + scheme_host_port_ + path_ + " failed: " + httplib::to_string(err));
    }

    if (result->status < 200 || result->status >= 300) {
      if (transient_status(result->status) && !last_attempt) continue;
      throw BackendError(result->status, excerpt(result->body),
                         "HTTP " + std::to_string(result->status) + " from " + scheme_host_port_ + path_ + ": " +
                             excerpt(result->body));
    }
    return parse_response(result->body, prompt_text);
  }
}

}  // namespace dualtrack
