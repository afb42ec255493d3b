#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dualtrack/http_backend.hpp"
#include "dualtrack/solver.hpp"

namespace dualtrack {

using EnvLookup = std::function<std::optional<std::string>(std::string_view)>;

// Reads the process environment.
std::optional<std::string> process_env(std::string_view name);

inline constexpr std::string_view kEnvApiBase = "DUALTRACK_API_BASE";
inline constexpr std::string_view kEnvApiKey = "DUALTRACK_API_KEY";

struct RunConfig {
  std::string api_base;
  std::string api_key;
  double timeout_seconds = 60.0;
  RoleEndpoint decomposer{"", std::string(decomposer_system_prompt())};
  RoleEndpoint evaluator{"", std::string(evaluator_system_prompt())};
  SolverConfig solver;
  std::string problems_path;
  std::string output_dir = "runs";
  std::uint64_t seed = 0;
  int workers = 1;

  // Unknown keys and wrong types raise InvalidConfig naming the field.
  static RunConfig from_json(const nlohmann::json& doc);
  static RunConfig load(const std::string& path);

  // Environment overrides the file for the endpoint and key.
  void apply_env(const EnvLookup& env);

  // `live` additionally requires an endpoint and model names.
  void validate(bool live) const;

  // The API key is never written out.
  nlohmann::json to_json() const;
  std::string hash() const;

  HttpBackendConfig http_config() const;
};

// JSON lines with "question" and either "gold" or a GSM8K "answer"; "id" is
// optional and defaults to "p<line>".
std::vector<Problem> read_problems(std::istream& in);

}  // namespace dualtrack
