#include "dualtrack/dataset.hpp"

#include <istream>

namespace dualtrack {

std::vector<std::string> split_solution_steps(std::string_view answer) {
  const auto marker = answer.find(kGoldMarker);
  if (marker == std::string_view::npos) {
    throw Error(ErrorCode::missing_marker, "answer has no '####' marker");
  }
  std::string_view body = answer.substr(0, marker);

  std::vector<std::string> steps;
  std::size_t start = 0;
  while (start <= body.size()) {
    auto end = body.find('\n', start);
    std::string_view line = body.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    line = trim(line);
    if (!line.empty()) steps.emplace_back(line);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return steps;
}

std::vector<TrainingInstance> make_instances(const RawExample& example) {
  const auto steps = split_solution_steps(example.answer);
  const CanonicalNumber gold = extract_gold_answer(example.answer);

  std::vector<TrainingInstance> out;
  out.reserve(steps.size() + 1);
  for (std::size_t t = 0; t <= steps.size(); ++t) {
    TrainingInstance instance;
    instance.step_index = static_cast<int>(t + 1);
    instance.id = example.id + "-" + std::to_string(instance.step_index);
    instance.problem_block = build_decomposer_prompt(example.question, std::span(steps.data(), t));
    if (t < steps.size()) {
      instance.target = std::string(kStepPrefix) + " " + steps[t];
    } else {
      instance.target = std::string(kFinalPrefix) + " " + gold.str();
    }
    out.push_back(std::move(instance));
  }
  return out;
}

std::string serialize_instance(const TrainingInstance& instance) {
  nlohmann::ordered_json doc = {
      {"id", instance.id},
      {"problem_block", instance.problem_block},
      {"target", instance.target},
      {"step_index", instance.step_index},
  };
  return doc.dump();
}

TrainingInstance deserialize_instance(std::string_view record) {
  try {
    const auto doc = nlohmann::json::parse(record);
    TrainingInstance instance;
    instance.id = doc.at("id").get<std::string>();
    instance.problem_block = doc.at("problem_block").get<std::string>();
    instance.target = doc.at("target").get<std::string>();
    instance.step_index = doc.at("step_index").get<int>();
    return instance;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::data_error, std::string("bad instance record: ") + e.what());
  }
}

int map_prm_rating(int rating) {
  switch (rating) {
    case -1: return 0;
    case 0: return 1;
    case 1: return 3;
    default: break;
  }
  throw Error(ErrorCode::unknown_rating, "unknown PRM rating " + std::to_string(rating));
}

namespace {

template <typename Fn>
void for_each_json_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::data_error, "line " + std::to_string(line_no) + ": invalid JSON (" + e.what() + ")");
    }
    try {
      fn(doc, line_no);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::data_error, "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code() == ErrorCode::unknown_rating ? e.code() : ErrorCode::data_error,
                  "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

}  // namespace

std::vector<RawExample> read_gsm8k(std::istream& in, std::string_view id_prefix) {
  std::vector<RawExample> examples;
  for_each_json_line(in, [&](const nlohmann::json& doc, std::size_t line_no) {
    RawExample example;
    example.question = doc.at("question").get<std::string>();
    example.answer = doc.at("answer").get<std::string>();
    if (doc.contains("id")) {
      example.id = doc["id"].is_string() ? doc["id"].get<std::string>() : doc["id"].dump();
    } else {
      example.id = std::string(id_prefix) + "-" + std::to_string(line_no);
    }
    if (trim(example.question).empty()) throw Error(ErrorCode::data_error, "empty question");
    if (example.answer.find(kGoldMarker) == std::string::npos) {
      throw Error(ErrorCode::missing_marker, "answer has no '####' marker");
    }
    examples.push_back(std::move(example));
  });
  return examples;
}

std::vector<RatingRecord> read_prm(std::istream& in) {
  std::vector<RatingRecord> records;
  for_each_json_line(in, [&](const nlohmann::json& doc, std::size_t) {
    RatingRecord record;
    record.text = doc.at("text").get<std::string>();
    record.rating = doc.at("rating").get<int>();
    record.mapped_score = map_prm_rating(record.rating);
    records.push_back(std::move(record));
  });
  return records;
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
  std::uint64_t hash = 14695981039346656037ull ^ seed;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

bool in_validation_split(std::string_view example_id, double validation_ratio, std::uint64_t seed) {
  if (validation_ratio <= 0.0) return false;
  if (validation_ratio >= 1.0) return true;
  const auto bucket = fnv1a64(example_id, seed * 0x9E3779B97F4A7C15ull) % 10000;
  return static_cast<double>(bucket) < validation_ratio * 10000.0;
}

nlohmann::json PrepStats::to_json() const {
  return {
      {"examples", examples},
      {"instances", instances},
      {"train_examples", train_examples},
      {"validation_examples", validation_examples},
      {"train_instances", train_instances},
      {"validation_instances", validation_instances},
      {"mean_steps_per_example", mean_steps_per_example},
  };
}

PrepOutput prepare_instances(const std::vector<RawExample>& examples, double validation_ratio, std::uint64_t seed) {
  if (validation_ratio < 0.0 || validation_ratio > 1.0) {
    throw Error(ErrorCode::invalid_config, "split ratio must be in [0, 1]");
  }
  PrepOutput out;
  std::size_t total_steps = 0;
  for (const auto& example : examples) {
    auto instances = make_instances(example);
    total_steps += instances.size() - 1;
    const bool validation = in_validation_split(example.id, validation_ratio, seed);
    auto& bucket = validation ? out.validation : out.train;
    (validation ? out.stats.validation_examples : out.stats.train_examples) += 1;
    for (auto& instance : instances) bucket.push_back(std::move(instance));
  }
  out.stats.examples = examples.size();
  out.stats.train_instances = out.train.size();
  out.stats.validation_instances = out.validation.size();
  out.stats.instances = out.train.size() + out.validation.size();
  out.stats.mean_steps_per_example =
      examples.empty() ? 0.0 : static_cast<double>(total_steps) / static_cast<double>(examples.size());
  return out;
}

}  // namespace dualtrack
