#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "dualtrack/protocol.hpp"

namespace dualtrack {

struct RawExample {
  std::string id;
  std::string question;
  // Worked solution with <<...>> annotations and a "####" answer line.
  std::string answer;
};

struct TrainingInstance {
  std::string id;
  // Same bytes as build_decomposer_prompt(question, history) without a hint.
  std::string problem_block;
  // "STEP: ..." or "FINAL_ANSWER: ...".
  std::string target;
  // 1-based; the final-answer instance has index T + 1.
  int step_index = 1;

  friend bool operator==(const TrainingInstance&, const TrainingInstance&) = default;
};

struct RatingRecord {
  std::string text;
  int rating = 0;
  int mapped_score = 0;
};

// Solution lines before the "####" marker, trimmed, blanks dropped.
std::vector<std::string> split_solution_steps(std::string_view answer);

// T next-step instances plus one final-answer instance.
std::vector<TrainingInstance> make_instances(const RawExample& example);

// One JSON object per line: {"id", "problem_block", "target", "step_index"}.
std::string serialize_instance(const TrainingInstance& instance);
TrainingInstance deserialize_instance(std::string_view record);

// -1 -> 0, 0 -> 1, 1 -> 3.
int map_prm_rating(int rating);

// Reads JSON-lines GSM8K data ({"question", "answer"}, optional "id").
// Missing ids become "<prefix>-<line>". Errors name the line number.
std::vector<RawExample> read_gsm8k(std::istream& in, std::string_view id_prefix = "gsm8k");
// Reads JSON-lines {"text", "rating"} records.
std::vector<RatingRecord> read_prm(std::istream& in);

// True when the example belongs to the validation split. Stable for a given
// (id, seed); roughly `validation_ratio` of ids land in validation.
bool in_validation_split(std::string_view example_id, double validation_ratio, std::uint64_t seed);

struct PrepStats {
  std::size_t examples = 0;
  std::size_t instances = 0;
  std::size_t train_instances = 0;
  std::size_t validation_instances = 0;
  std::size_t train_examples = 0;
  std::size_t validation_examples = 0;
  double mean_steps_per_example = 0.0;

  nlohmann::json to_json() const;
};

struct PrepOutput {
  std::vector<TrainingInstance> train;
  std::vector<TrainingInstance> validation;
  PrepStats stats;
};

PrepOutput prepare_instances(const std::vector<RawExample>& examples, double validation_ratio, std::uint64_t seed);

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0);

}  // namespace dualtrack
