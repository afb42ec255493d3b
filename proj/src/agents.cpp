#include "dualtrack/agents.hpp"

#include <cmath>

namespace dualtrack {

std::string_view to_string(Role role) {
  return role == Role::decomposer ? "decomposer" : "evaluator";
}

void DecodeParams::validate(std::string_view field_prefix) const {
  const std::string prefix(field_prefix);
  if (!std::isfinite(temperature) || temperature < 0.0) {
    throw Error(ErrorCode::invalid_config, prefix + "temperature must be a finite value >= 0");
  }
  if (max_new_tokens < 1) {
    throw Error(ErrorCode::invalid_config, prefix + "max_new_tokens must be >= 1");
  }
}

std::int64_t estimate_tokens(std::string_view text) {
  return static_cast<std::int64_t>((text.size() + 3) / 4);
}

Script Script::from_json(const nlohmann::json& doc) {
  Script script;
  if (!doc.is_object()) throw Error(ErrorCode::data_error, "script fixture must be a JSON object");

  if (doc.contains("events")) {
    for (const auto& event : doc.at("events")) {
      const auto kind = event.value("kind", "");
      const auto& payload = event.value("payload", nlohmann::json::object());
      if (kind == "generated" && payload.contains("raw")) {
        script.decomposer.push_back(payload.at("raw").get<std::string>());
      } else if (kind == "evaluated" && payload.contains("raw")) {
        script.evaluator.push_back(payload.at("raw").get<std::string>());
      }
    }
    return script;
  }

  for (const auto& [key, value] : doc.items()) {
    if (key != "decomposer" && key != "evaluator") {
      throw Error(ErrorCode::data_error, "script fixture: unknown key '" + key + "'");
    }
    auto& target = key == "decomposer" ? script.decomposer : script.evaluator;
    for (const auto& reply : value) {
      if (!reply.is_string()) throw Error(ErrorCode::data_error, "script fixture: " + key + " replies must be strings");
      target.push_back(reply.get<std::string>());
    }
  }
  return script;
}

nlohmann::json Script::to_json() const {
  return {{"decomposer", decomposer}, {"evaluator", evaluator}};
}

const std::vector<std::string>& ScriptedBackend::replies(Role role) const {
  return role == Role::decomposer ? script_.decomposer : script_.evaluator;
}

std::size_t ScriptedBackend::remaining(Role role) const {
  return replies(role).size() - cursors_[index(role)];
}

AgentReply ScriptedBackend::complete(Role role, std::string_view prompt, const DecodeParams&) {
  const auto& list = replies(role);
  auto& cursor = cursors_[index(role)];
  if (cursor >= list.size()) {
    throw Error(ErrorCode::script_exhausted,
                "script has no " + std::string(to_string(role)) + " replies left (used " +
                    std::to_string(list.size()) + ")");
  }
  AgentReply reply;
  reply.raw_text = list[cursor++];
  reply.prompt_tokens = estimate_tokens(prompt);
  reply.completion_tokens = estimate_tokens(reply.raw_text);
  return reply;
}

}  // namespace dualtrack
