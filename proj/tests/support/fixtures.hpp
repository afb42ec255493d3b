#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dualtrack/agents.hpp"
#include "dualtrack/dataset.hpp"
#include "dualtrack/protocol.hpp"

namespace dualtrack::testing {

// GSM8K items used throughout the tests.
inline RawExample natalia() {
  return {"natalia",
          "Natalia sold clips to 48 of her friends in April, and then she sold half as many clips in May. "
          "How many clips did Natalia sell altogether in April and May?",
          "Natalia sold <<48/2 = 24>> clips in May.\nNatalia sold <<48 + 24 = 72>> clips altogether.\n#### 72"};
}

inline RawExample weng() {
  return {"weng",
          "Weng earns $12 an hour for babysitting. Yesterday, she just did 50 minutes of babysitting. "
          "How much did she earn?",
          "Weng earns 12/60 = $<<12/60=0.2>>0.2 per minute.\n"
          "Working 50 minutes, she earned 0.2 x 50 = $<<0.2*50=10>>10.\n#### 10"};
}

inline Problem henry_problem() {
  return {"henry",
          "Henry made two stops during his 60-mile bike trip. He first stopped after 20 miles. His second stop "
          "was 15 miles before the end of the trip. How many miles did he travel between his first and second "
          "stops?",
          CanonicalNumber::from_literal("25")};
}

inline constexpr const char* kHenryBadStep =
    "STEP: Henry traveled 60 - 45 = 15 miles between his first and second stops.";
inline constexpr const char* kHenryFixedStep =
    "STEP: Henry traveled 40 - 15 = 25 miles between his first and second stops.";
inline constexpr const char* kHenryFeedback =
    "The calculation is wrong; he traveled 60 - 20 = 40 miles before his first stop, so he traveled "
    "40 - 15 = 25 miles between his first and second stops.";

inline Script henry_script() {
  Script s;
  s.decomposer = {kHenryBadStep, kHenryFixedStep, "FINAL_ANSWER: 25"};
  s.evaluator = {std::string("Raw score: 0.0/3\nFeedback: ") + kHenryFeedback, "Score: 3\nFeedback: Correct.",
                 "Score: 3\nFeedback: The answer follows from the accepted step."};
  return s;
}

// Wraps a backend and records every prompt it receives.
class RecordingBackend : public Backend {
 public:
  explicit RecordingBackend(Backend& inner) : inner_(inner) {}

  AgentReply complete(Role role, std::string_view prompt, const DecodeParams& params) override {
    (role == Role::decomposer ? decomposer_prompts : evaluator_prompts).emplace_back(prompt);
    return inner_.complete(role, prompt, params);
  }

  std::vector<std::string> decomposer_prompts;
  std::vector<std::string> evaluator_prompts;

 private:
  Backend& inner_;
};

// Random scripted scenario: steps drawn from a small pool of computations so
// repeats (and therefore cache hits) are common, phrased with random words.
struct Scenario {
  Problem problem;
  Script script;
};

inline std::string random_word(std::mt19937_64& rng) {
  static const std::vector<std::string> words = {"so",    "then",  "she",   "has",   "total", "apples",
                                                 "the",   "shop",  "sells", "miles", "each",  "left",
                                                 "makes", "after", "we",    "get",   "more",  "of"};
  return words[rng() % words.size()];
}

inline std::string phrase_math(const std::string& math, std::mt19937_64& rng) {
  std::string out;
  const int before = static_cast<int>(rng() % 4);
  for (int i = 0; i < before; ++i) out += random_word(rng) + " ";
  out += math;
  const int after = static_cast<int>(rng() % 4);
  for (int i = 0; i < after; ++i) out += " " + random_word(rng);
  return out;
}

inline Scenario random_scenario(std::mt19937_64& rng, int index, std::size_t decomposer_replies = 24) {
  Scenario sc;
  const int a = static_cast<int>(rng() % 90) + 10;
  const int b = static_cast<int>(rng() % 90) + 10;
  sc.problem.id = "s" + std::to_string(index);
  sc.problem.question = "A farm has " + std::to_string(a) + " hens and buys " + std::to_string(b) +
                        " more. Each hen lays 2 eggs a day. How many eggs are laid per day?";
  sc.problem.gold_answer = CanonicalNumber::from_literal(std::to_string((a + b) * 2));

  std::vector<std::string> pool;
  for (int i = 0; i < 4; ++i) {
    const int x = static_cast<int>(rng() % 50) + 1;
    const int y = static_cast<int>(rng() % 50) + 1;
    pool.push_back(std::to_string(x) + " + " + std::to_string(y) + " = " + std::to_string(x + y));
  }
  pool.push_back(std::to_string(a) + " + " + std::to_string(b) + " = " + std::to_string(a + b));

  for (std::size_t i = 0; i < decomposer_replies; ++i) {
    const auto roll = rng() % 20;
    if (roll == 0) {
      sc.script.decomposer.push_back("I think the answer involves hens.");
    } else if (roll == 1) {
      sc.script.decomposer.push_back("FINAL_ANSWER: " + std::to_string((a + b) * 2 + static_cast<int>(rng() % 2)));
    } else {
      sc.script.decomposer.push_back("STEP: " + phrase_math(pool[rng() % pool.size()], rng) + ".");
    }
  }
  // Longer than the decomposer list so the evaluator never runs dry first.
  for (std::size_t i = 0; i < decomposer_replies + 4; ++i) {
    const int score = static_cast<int>(rng() % 4);
    sc.script.evaluator.push_back("Score: " + std::to_string(score) + "\nFeedback: hint number " + std::to_string(i) +
                                  ".");
  }
  return sc;
}

}  // namespace dualtrack::testing
