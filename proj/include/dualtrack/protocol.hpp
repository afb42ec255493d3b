#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "dualtrack/error.hpp"

namespace dualtrack {

// Contract strings shared by the solver, the dataset pipeline and the agents.
inline constexpr std::string_view kStepPrefix = "STEP:";
inline constexpr std::string_view kFinalPrefix = "FINAL_ANSWER:";
inline constexpr std::string_view kHintPrefix = "HINT:";
inline constexpr std::string_view kScorePrefix = "Score:";
inline constexpr std::string_view kRawScorePrefix = "Raw score:";
inline constexpr std::string_view kFeedbackPrefix = "Feedback:";
inline constexpr std::string_view kGoldMarker = "####";
inline constexpr std::string_view kProblemHeader = "Problem: ";
inline constexpr std::string_view kHistoryHeader = "Steps completed so far:";

// Exact decimal in canonical form: optional '-', integer digits without
// leading zeros, optional fraction without trailing zeros. "-0" becomes "0".
class CanonicalNumber {
 public:
  // Accepts a bare literal such as "-012.50" or ".5". Throws NoNumberFound
  // for anything else.
  static CanonicalNumber from_literal(std::string_view literal);

  const std::string& str() const noexcept { return text_; }

  friend bool operator==(const CanonicalNumber&, const CanonicalNumber&) = default;

 private:
  explicit CanonicalNumber(std::string text) : text_(std::move(text)) {}
  std::string text_;
};

struct Problem {
  std::string id;
  std::string question;
  std::optional<CanonicalNumber> gold_answer;
};

enum class StepKind { intermediate, final };

std::string_view to_string(StepKind kind);
std::string_view prefix_for(StepKind kind);

struct StepCandidate {
  StepKind kind = StepKind::intermediate;
  std::string text;
  std::string raw;
  // Set for final candidates whose body holds a number.
  std::optional<CanonicalNumber> answer;

  bool unparseable_final() const { return kind == StepKind::final && !answer; }
};

struct AcceptedStep {
  StepKind kind = StepKind::intermediate;
  std::string text;
  std::string fingerprint;
  int score = 0;
  bool forced = false;
};

struct Evaluation {
  int score = 0;
  std::string feedback;

  friend bool operator==(const Evaluation&, const Evaluation&) = default;
};

// Decomposer user prompt:
//   Problem: <question>
//   Steps completed so far:
//   STEP 1: <text>
//   ...
//   HINT: <hint>            (only when a hint is given)
// Lines are joined by '\n' with no trailing newline.
std::string build_decomposer_prompt(std::string_view question,
                                    std::span<const std::string> history,
                                    std::optional<std::string_view> hint = std::nullopt);
std::string build_decomposer_prompt(const Problem& problem,
                                    std::span<const AcceptedStep> history,
                                    std::optional<std::string_view> hint = std::nullopt);

std::string build_evaluator_prompt(const Problem& problem,
                                   std::span<const AcceptedStep> history,
                                   const StepCandidate& candidate);

// Role instructions sent as the system message by chat backends.
std::string_view decomposer_system_prompt();
std::string_view evaluator_system_prompt();

// First line (after leading whitespace) that starts with STEP: or
// FINAL_ANSWER: wins; everything else is discarded.
StepCandidate parse_agent_step(std::string_view raw);

// Accepts "Score: n", "Raw score: n/3" and "Raw score: n.0/3". Decimals are
// truncated. Feedback comes from the first "Feedback:" line.
Evaluation parse_evaluation(std::string_view raw);

// Last numeric literal in the text after dropping currency, thousands
// separators and percent signs.
CanonicalNumber normalize_answer(std::string_view text);

// normalize_answer applied to the remainder of the "####" line.
CanonicalNumber extract_gold_answer(std::string_view gsm8k_answer);

// Whitespace helpers shared across modules.
std::string_view trim(std::string_view s);
std::string_view trim_left(std::string_view s);

}  // namespace dualtrack
