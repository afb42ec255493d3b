#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dualtrack/agents.hpp"
#include "dualtrack/cache.hpp"
#include "dualtrack/protocol.hpp"

namespace dualtrack {

struct SolverConfig {
  // A step is accepted when its score is strictly greater than this.
  int accept_threshold = 1;
  int max_retries_per_step = 3;
  int max_steps = 12;
  std::int64_t token_budget = 100000;
  bool cache_enabled = true;
  // Evaluated steps scoring at or below this are cached as known-bad.
  int cache_bad_threshold = 1;
  DecodeParams decomposer;
  DecodeParams evaluator;

  void validate() const;
  nlohmann::json to_json() const;
  static SolverConfig from_json(const nlohmann::json& doc);
};

class BudgetLedger {
 public:
  explicit BudgetLedger(std::int64_t limit = 0) : limit_(limit) {}

  // Charges are applied after a call completes; the limit is only consulted
  // before the next call, so the total can overshoot by one call's cost.
  void charge(Role role, const AgentReply& reply);

  std::int64_t limit() const { return limit_; }
  std::int64_t spent(Role role) const { return role == Role::decomposer ? decomposer_ : evaluator_; }
  std::int64_t spent_total() const { return decomposer_ + evaluator_; }
  bool exhausted() const { return spent_total() >= limit_; }

 private:
  std::int64_t limit_;
  std::int64_t decomposer_ = 0;
  std::int64_t evaluator_ = 0;
};

enum class StepDecision { accept, retry, forced_accept };

std::string_view to_string(StepDecision decision);

StepDecision step_decision(int score, int retries_so_far, const SolverConfig& config);

enum class EventKind {
  generated,
  cache_rejected,
  evaluated,
  accepted,
  retried,
  forced_accept,
  budget_stop,
  step_limit_stop,
  finished,
};

enum class Outcome { solved, budget_exhausted, step_limit, backend_failure, malformed_output };

std::string_view to_string(EventKind kind);
std::string_view to_string(Outcome outcome);
Outcome outcome_from_string(std::string_view name);

struct TraceEvent {
  EventKind kind = EventKind::generated;
  // 1-based index of the step slot being filled.
  int slot = 1;
  // Retries already spent on this slot when the event happened.
  int attempt = 0;
  std::int64_t tokens_charged = 0;
  nlohmann::json payload = nlohmann::json::object();
};

struct SolveTrace {
  std::string problem_id;
  std::string question;
  std::optional<CanonicalNumber> gold_answer;
  SolverConfig config;
  std::vector<TraceEvent> events;
  std::vector<AcceptedStep> accepted_steps;
  std::optional<CanonicalNumber> final_answer;
  Outcome outcome = Outcome::budget_exhausted;
  BudgetLedger ledger;
  std::vector<std::pair<std::string, CacheOrigin>> cache_entries;
  std::string error;

  std::size_t count(EventKind kind) const;
  std::size_t decomposer_calls() const { return count(EventKind::generated); }
  std::size_t evaluator_calls() const { return count(EventKind::evaluated); }

  // One document per problem. "labels" is left empty for human annotators.
  nlohmann::json to_json() const;
};

inline constexpr std::string_view kMalformedStepFeedback =
    "Emit exactly one STEP: or FINAL_ANSWER: line.";
inline constexpr std::string_view kUnparseableFinalFeedback =
    "The FINAL_ANSWER: line must contain the numeric answer.";

// Runs the generate / filter / evaluate / accept-or-retry loop for one problem.
// Backend failures end the solve with Outcome::backend_failure and keep the
// partial trace.
SolveTrace solve(const Problem& problem, const SolverConfig& config, Backend& decomposer, Backend& evaluator);

}  // namespace dualtrack
