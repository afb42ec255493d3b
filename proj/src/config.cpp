#include "dualtrack/config.hpp"

#include <cstdlib>
#include <fstream>
#include <unordered_set>

#include "dualtrack/harness.hpp"

namespace dualtrack {

namespace {

[[noreturn]] void config_error(const std::string& message) { throw Error(ErrorCode::invalid_config, message); }

template <typename T>
T get_as(const nlohmann::json& value, const std::string& field) {
  try {
    return value.get<T>();
  } catch (const nlohmann::json::exception&) {
    config_error("config field '" + field + "' has the wrong type");
  }
}

RoleEndpoint role_from_json(const nlohmann::json& doc, const std::string& name, RoleEndpoint role) {
  if (!doc.is_object()) config_error("config field '" + name + "' must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (key == "model") {
      role.model = get_as<std::string>(value, name + ".model");
    } else if (key == "system_prompt") {
      role.system_prompt = get_as<std::string>(value, name + ".system_prompt");
    } else {
      config_error("unknown config key '" + name + "." + key + "'");
    }
  }
  return role;
}

}  // namespace

std::optional<std::string> process_env(std::string_view name) {
  const char* value = std::getenv(std::string(name).c_str());
  if (value == nullptr) return std::nullopt;
  return std::string(value);
}

RunConfig RunConfig::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) config_error("config must be a JSON object");
  RunConfig config;
  for (const auto& [key, value] : doc.items()) {
    if (key == "api_base") {
      config.api_base = get_as<std::string>(value, key);
    } else if (key == "api_key") {
      config.api_key = get_as<std::string>(value, key);
    } else if (key == "timeout_seconds") {
      config.timeout_seconds = get_as<double>(value, key);
    } else if (key == "decomposer") {
      config.decomposer = role_from_json(value, key, config.decomposer);
    } else if (key == "evaluator") {
      config.evaluator = role_from_json(value, key, config.evaluator);
    } else if (key == "solver") {
      config.solver = SolverConfig::from_json(value);
    } else if (key == "data") {
      if (!value.is_object()) config_error("config field 'data' must be an object");
      for (const auto& [dkey, dvalue] : value.items()) {
        if (dkey != "problems") config_error("unknown config key 'data." + dkey + "'");
        config.problems_path = get_as<std::string>(dvalue, "data.problems");
      }
    } else if (key == "output_dir") {
      config.output_dir = get_as<std::string>(value, key);
    } else if (key == "seed") {
      config.seed = get_as<std::uint64_t>(value, key);
    } else if (key == "workers") {
      config.workers = get_as<int>(value, key);
    } else {
      config_error("unknown config key '" + key + "'");
    }
  }
  return config;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot read config file '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    config_error("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(doc);
}

void RunConfig::apply_env(const EnvLookup& env) {
  if (auto base = env(kEnvApiBase)) api_base = *base;
  if (auto key = env(kEnvApiKey)) api_key = *key;
}

void RunConfig::validate(bool live) const {
  solver.validate();
  if (workers < 1) config_error("workers must be >= 1");
  if (!(timeout_seconds > 0)) config_error("timeout_seconds must be > 0");
  if (live) {
    if (api_base.empty()) config_error("api_base is required (config file or DUALTRACK_API_BASE)");
    if (decomposer.model.empty()) config_error("decomposer.model is required");
    if (evaluator.model.empty()) config_error("evaluator.model is required");
  }
}

nlohmann::json RunConfig::to_json() const {
  return {
      {"api_base", api_base},
      {"timeout_seconds", timeout_seconds},
      {"decomposer", {{"model", decomposer.model}, {"system_prompt", decomposer.system_prompt}}},
      {"evaluator", {{"model", evaluator.model}, {"system_prompt", evaluator.system_prompt}}},
      {"solver", solver.to_json()},
      {"data", {{"problems", problems_path}}},
      {"output_dir", output_dir},
      {"seed", seed},
      {"workers", workers},
  };
}

std::string RunConfig::hash() const {
  // Output location and parallelism do not change results.
  auto doc = to_json();
  doc.erase("output_dir");
  doc.erase("workers");
  return config_hash(doc);
}

HttpBackendConfig RunConfig::http_config() const {
  HttpBackendConfig http;
  http.base_url = api_base;
  http.api_key = api_key;
  http.decomposer = decomposer;
  http.evaluator = evaluator;
  http.timeout_seconds = timeout_seconds;
  return http;
}

std::vector<Problem> read_problems(std::istream& in) {
  std::vector<Problem> problems;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    try {
      const auto doc = nlohmann::json::parse(line);
      Problem p;
      p.id = doc.contains("id") ? (doc["id"].is_string() ? doc["id"].get<std::string>() : doc["id"].dump())
                                : "p" + std::to_string(line_no);
      p.question = doc.at("question").get<std::string>();
      if (trim(p.question).empty()) throw Error(ErrorCode::data_error, "empty question");
      if (doc.contains("gold")) {
        const auto& gold = doc["gold"];
        p.gold_answer = normalize_answer(gold.is_string() ? gold.get<std::string>() : gold.dump());
      } else if (doc.contains("answer")) {
        p.gold_answer = extract_gold_answer(doc["answer"].get<std::string>());
      }
      if (!ids.insert(p.id).second) throw Error(ErrorCode::data_error, "duplicate problem id '" + p.id + "'");
      problems.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::data_error, where + e.what());
    } catch (const Error& e) {
      throw Error(ErrorCode::data_error, where + e.what());
    }
  }
  return problems;
}

}  // namespace dualtrack
