#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dualtrack/error.hpp"

namespace dualtrack {

enum class Role { decomposer, evaluator };

std::string_view to_string(Role role);

struct DecodeParams {
  double temperature = 0.0;
  int max_new_tokens = 128;

  // Throws InvalidConfig naming the offending field.
  void validate(std::string_view field_prefix = "") const;
};

struct AgentReply {
  std::string raw_text;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;

  std::int64_t total_tokens() const { return prompt_tokens + completion_tokens; }
};

// ceil(bytes / 4); 0 for empty text.
std::int64_t estimate_tokens(std::string_view text);

class Backend {
 public:
  virtual ~Backend() = default;
  virtual AgentReply complete(Role role, std::string_view prompt, const DecodeParams& params) = 0;
};

// Canned replies per role. Each call returns the next reply for that role.
struct Script {
  std::vector<std::string> decomposer;
  std::vector<std::string> evaluator;

  // {"decomposer": [...], "evaluator": [...]}, or a solve trace document, in
  // which case the raw agent outputs recorded in its events are replayed.
  static Script from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(Script script) : script_(std::move(script)) {}

  AgentReply complete(Role role, std::string_view prompt, const DecodeParams& params) override;

  std::size_t cursor(Role role) const { return cursors_[index(role)]; }
  std::size_t remaining(Role role) const;

 private:
  static std::size_t index(Role role) { return role == Role::decomposer ? 0 : 1; }
  const std::vector<std::string>& replies(Role role) const;

  Script script_;
  std::array<std::size_t, 2> cursors_{0, 0};
};

}  // namespace dualtrack
