#include "dualtrack/solver.hpp"

#include <algorithm>

namespace dualtrack {

namespace {

void config_error(const std::string& message) { throw Error(ErrorCode::invalid_config, message); }

template <typename T>
T read_field(const nlohmann::json& doc, const std::string& key, const std::string& path) {
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    config_error(path + key + " has the wrong type");
  }
  return T{};
}

DecodeParams decode_from_json(const nlohmann::json& doc, const std::string& path) {
  if (!doc.is_object()) config_error(path + " must be an object");
  DecodeParams params;
  for (const auto& [key, value] : doc.items()) {
    if (key == "temperature") {
      params.temperature = read_field<double>(doc, key, path + ".");
    } else if (key == "max_new_tokens") {
      params.max_new_tokens = read_field<int>(doc, key, path + ".");
    } else {
      config_error("unknown key '" + path + "." + key + "'");
    }
  }
  return params;
}

nlohmann::json decode_to_json(const DecodeParams& params) {
  return {{"temperature", params.temperature}, {"max_new_tokens", params.max_new_tokens}};
}

nlohmann::json step_to_json(const AcceptedStep& step, std::size_t index) {
  return {
      {"index", index},
      {"kind", to_string(step.kind)},
      {"text", step.text},
      {"fingerprint", step.fingerprint},
      {"score", step.score},
      {"forced", step.forced},
  };
}

}  // namespace

void SolverConfig::validate() const {
  if (accept_threshold < 0 || accept_threshold > 3) config_error("solver.accept_threshold must be in [0, 3]");
  if (max_retries_per_step < 1) config_error("solver.max_retries_per_step must be >= 1");
  if (max_steps < 1) config_error("solver.max_steps must be >= 1");
  if (token_budget < 0) config_error("solver.token_budget must be >= 0");
  if (cache_bad_threshold < -1 || cache_bad_threshold > accept_threshold) {
    config_error("solver.cache_bad_threshold must be in [-1, accept_threshold]");
  }
  decomposer.validate("solver.decomposer.");
  evaluator.validate("solver.evaluator.");
}

nlohmann::json SolverConfig::to_json() const {
  return {
      {"accept_threshold", accept_threshold},
      {"max_retries_per_step", max_retries_per_step},
      {"max_steps", max_steps},
      {"token_budget", token_budget},
      {"cache_enabled", cache_enabled},
      {"cache_bad_threshold", cache_bad_threshold},
      {"decomposer", decode_to_json(decomposer)},
      {"evaluator", decode_to_json(evaluator)},
  };
}

SolverConfig SolverConfig::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) config_error("solver must be an object");
  SolverConfig config;
  const std::string path = "solver.";
  for (const auto& [key, value] : doc.items()) {
    if (key == "accept_threshold") {
      config.accept_threshold = read_field<int>(doc, key, path);
    } else if (key == "max_retries_per_step") {
      config.max_retries_per_step = read_field<int>(doc, key, path);
    } else if (key == "max_steps") {
      config.max_steps = read_field<int>(doc, key, path);
    } else if (key == "token_budget") {
      config.token_budget = read_field<std::int64_t>(doc, key, path);
    } else if (key == "cache_enabled") {
      config.cache_enabled = read_field<bool>(doc, key, path);
    } else if (key == "cache_bad_threshold") {
      config.cache_bad_threshold = read_field<int>(doc, key, path);
    } else if (key == "decomposer") {
      config.decomposer = decode_from_json(value, path + key);
    } else if (key == "evaluator") {
      config.evaluator = decode_from_json(value, path + key);
    } else {
      config_error("unknown key '" + path + key + "'");
    }
  }
  return config;
}

void BudgetLedger::charge(Role role, const AgentReply& reply) {
  const auto cost = std::max<std::int64_t>(0, reply.total_tokens());
  (role == Role::decomposer ? decomposer_ : evaluator_) += cost;
}

std::string_view to_string(StepDecision decision) {
  switch (decision) {
    case StepDecision::accept: return "accept";
    case StepDecision::retry: return "retry";
    case StepDecision::forced_accept: return "forced_accept";
  }
  return "retry";
}

StepDecision step_decision(int score, int retries_so_far, const SolverConfig& config) {
  if (score > config.accept_threshold) return StepDecision::accept;
  if (retries_so_far < config.max_retries_per_step) return StepDecision::retry;
  return StepDecision::forced_accept;
}

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::generated: return "generated";
    case EventKind::cache_rejected: return "cache_rejected";
    case EventKind::evaluated: return "evaluated";
    case EventKind::accepted: return "accepted";
    case EventKind::retried: return "retried";
    case EventKind::forced_accept: return "forced_accept";
    case EventKind::budget_stop: return "budget_stop";
    case EventKind::step_limit_stop: return "step_limit_stop";
    case EventKind::finished: return "finished";
  }
  return "generated";
}

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::solved: return "solved";
    case Outcome::budget_exhausted: return "budget_exhausted";
    case Outcome::step_limit: return "step_limit";
    case Outcome::backend_failure: return "backend_failure";
    case Outcome::malformed_output: return "malformed_output";
  }
  return "backend_failure";
}

Outcome outcome_from_string(std::string_view name) {
  for (auto o : {Outcome::solved, Outcome::budget_exhausted, Outcome::step_limit, Outcome::backend_failure,
                 Outcome::malformed_output}) {
    if (to_string(o) == name) return o;
  }
  throw Error(ErrorCode::data_error, "unknown outcome '" + std::string(name) + "'");
}

std::size_t SolveTrace::count(EventKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(events.begin(), events.end(), [kind](const TraceEvent& e) { return e.kind == kind; }));
}

nlohmann::json SolveTrace::to_json() const {
  nlohmann::json doc;
  doc["problem_id"] = problem_id;
  doc["question"] = question;
  doc["gold_answer"] = gold_answer ? nlohmann::json(gold_answer->str()) : nlohmann::json(nullptr);
  doc["config"] = config.to_json();

  auto& events_json = doc["events"] = nlohmann::json::array();
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    events_json.push_back({
        {"seq", i},
        {"kind", to_string(e.kind)},
        {"slot", e.slot},
        {"attempt", e.attempt},
        {"tokens_charged", e.tokens_charged},
        {"payload", e.payload},
    });
  }

  auto& steps_json = doc["accepted_steps"] = nlohmann::json::array();
  for (std::size_t i = 0; i < accepted_steps.size(); ++i) steps_json.push_back(step_to_json(accepted_steps[i], i + 1));

  doc["final_answer"] = final_answer ? nlohmann::json(final_answer->str()) : nlohmann::json(nullptr);
  doc["outcome"] = to_string(outcome);
  doc["tokens"] = {
      {"limit", ledger.limit()},
      {"decomposer", ledger.spent(Role::decomposer)},
      {"evaluator", ledger.spent(Role::evaluator)},
      {"total", ledger.spent_total()},
  };
  auto& cache_json = doc["cache"] = nlohmann::json::array();
  for (const auto& [fp, origin] : cache_entries) cache_json.push_back({{"fingerprint", fp}, {"origin", to_string(origin)}});
  doc["error"] = error.empty() ? nlohmann::json(nullptr) : nlohmann::json(error);
  doc["labels"] = nlohmann::json::array();
  return doc;
}

namespace {

// Mutable state for one solve; keeps solve() itself readable.
class SolveRun {
 public:
  SolveRun(const Problem& problem, const SolverConfig& config, Backend& decomposer, Backend& evaluator)
      : problem_(problem), config_(config), decomposer_(decomposer), evaluator_(evaluator) {
    trace_.problem_id = problem.id;
    trace_.question = problem.question;
    trace_.gold_answer = problem.gold_answer;
    trace_.config = config;
    trace_.ledger = BudgetLedger(config.token_budget);
  }

  SolveTrace run() {
    try {
      loop();
    } catch (const Error& e) {
      trace_.outcome = Outcome::backend_failure;
      trace_.error = std::string(to_string(e.code())) + ": " + e.what();
    }
    for (const auto& [fp, origin] : cache_.entries()) trace_.cache_entries.emplace_back(fp, origin);
    return std::move(trace_);
  }

 private:
  int slot() const { return static_cast<int>(trace_.accepted_steps.size()) + 1; }

  void emit(EventKind kind, nlohmann::json payload, std::int64_t tokens = 0) {
    trace_.events.push_back(TraceEvent{kind, slot(), retries_, tokens, std::move(payload)});
  }

  bool stop_if_exhausted() {
    if (!trace_.ledger.exhausted()) return false;
    emit(EventKind::budget_stop, {{"spent", trace_.ledger.spent_total()}, {"limit", trace_.ledger.limit()}});
    trace_.outcome = Outcome::budget_exhausted;
    return true;
  }

  AgentReply call(Role role, Backend& backend, const std::string& prompt, const DecodeParams& params) {
    AgentReply reply = backend.complete(role, prompt, params);
    trace_.ledger.charge(role, reply);
    return reply;
  }

  void loop() {
    for (;;) {
      if (stop_if_exhausted()) return;

      const std::string prompt = build_decomposer_prompt(
          problem_, trace_.accepted_steps,
          hint_ ? std::optional<std::string_view>(*hint_) : std::nullopt);
      const AgentReply gen = call(Role::decomposer, decomposer_, prompt, config_.decomposer);

      nlohmann::json gen_payload = {
          {"raw", gen.raw_text},
          {"hint", hint_ ? nlohmann::json(*hint_) : nlohmann::json(nullptr)},
          {"prompt_tokens", gen.prompt_tokens},
          {"completion_tokens", gen.completion_tokens},
      };

      std::optional<StepCandidate> candidate;
      std::string parse_error;
      try {
        candidate = parse_agent_step(gen.raw_text);
        if (candidate->unparseable_final()) {
          parse_error = std::string(kUnparseableFinalFeedback);
          candidate.reset();
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::malformed_step) throw;
        parse_error = std::string(kMalformedStepFeedback);
      }

      if (!candidate) {
        gen_payload["malformed"] = parse_error;
        emit(EventKind::generated, std::move(gen_payload), gen.total_tokens());
        if (step_decision(0, retries_, config_) == StepDecision::retry) {
          retry(parse_error);
          continue;
        }
        trace_.outcome = Outcome::malformed_output;
        trace_.error = "decomposer output unusable after " + std::to_string(retries_) + " retries";
        return;
      }

      const std::string fp = fingerprint(candidate->text);
      gen_payload["step"] = {{"kind", to_string(candidate->kind)}, {"text", candidate->text}, {"fingerprint", fp}};
      emit(EventKind::generated, std::move(gen_payload), gen.total_tokens());

      Evaluation evaluation;
      const CacheDecision cached = config_.cache_enabled ? cache_.check(fp) : CacheDecision::miss;
      if (cached != CacheDecision::miss) {
        evaluation = synth_rejection(cached);
        emit(EventKind::cache_rejected, {{"fingerprint", fp},
                                         {"decision", to_string(cached)},
                                         {"score", evaluation.score},
                                         {"feedback", evaluation.feedback}});
      } else {
        if (stop_if_exhausted()) return;
        const std::string eval_prompt = build_evaluator_prompt(problem_, trace_.accepted_steps, *candidate);
        const AgentReply rated = call(Role::evaluator, evaluator_, eval_prompt, config_.evaluator);
        nlohmann::json eval_payload = {
            {"raw", rated.raw_text},
            {"prompt_tokens", rated.prompt_tokens},
            {"completion_tokens", rated.completion_tokens},
        };
        bool parsed = true;
        try {
          evaluation = parse_evaluation(rated.raw_text);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::malformed_evaluation && e.code() != ErrorCode::score_out_of_range) throw;
          parsed = false;
          evaluation = Evaluation{0, ""};
          eval_payload["error"] = std::string(to_string(e.code())) + ": " + e.what();
        }
        eval_payload["score"] = evaluation.score;
        eval_payload["feedback"] = evaluation.feedback;
        emit(EventKind::evaluated, std::move(eval_payload), rated.total_tokens());
        if (parsed && config_.cache_enabled && evaluation.score <= config_.cache_bad_threshold) {
          cache_.record(fp, CacheOrigin::low_score);
        }
      }

      const StepDecision decision = step_decision(evaluation.score, retries_, config_);
      if (decision == StepDecision::retry) {
        retry(evaluation.feedback);
        continue;
      }

      const bool forced = decision == StepDecision::forced_accept;
      emit(forced ? EventKind::forced_accept : EventKind::accepted,
           {{"kind", to_string(candidate->kind)}, {"text", candidate->text}, {"score", evaluation.score}});
      trace_.accepted_steps.push_back(AcceptedStep{candidate->kind, candidate->text, fp, evaluation.score, forced});
      if (config_.cache_enabled) cache_.record(fp, CacheOrigin::accepted_duplicate_source);
      retries_ = 0;
      hint_.reset();

      if (candidate->kind == StepKind::final) {
        trace_.final_answer = candidate->answer;
        trace_.outcome = Outcome::solved;
        trace_.events.push_back(TraceEvent{EventKind::finished, slot() - 1, 0, 0,
                                           {{"final_answer", candidate->answer->str()}}});
        return;
      }
      if (static_cast<int>(trace_.accepted_steps.size()) >= config_.max_steps) {
        emit(EventKind::step_limit_stop, {{"steps", trace_.accepted_steps.size()}});
        trace_.outcome = Outcome::step_limit;
        return;
      }
    }
  }

  void retry(const std::string& feedback) {
    ++retries_;
    if (feedback.empty()) {
      hint_.reset();
    } else {
      hint_ = feedback;
    }
    emit(EventKind::retried, {{"hint", hint_ ? nlohmann::json(*hint_) : nlohmann::json(nullptr)}, {"retries", retries_}});
  }

  const Problem& problem_;
  const SolverConfig& config_;
  Backend& decomposer_;
  Backend& evaluator_;
  SolveTrace trace_;
  RejectionCache cache_;
  int retries_ = 0;
  std::optional<std::string> hint_;
};

}  // namespace

SolveTrace solve(const Problem& problem, const SolverConfig& config, Backend& decomposer, Backend& evaluator) {
  config.validate();
  return SolveRun(problem, config, decomposer, evaluator).run();
}

}  // namespace dualtrack
