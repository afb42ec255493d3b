#include "dualtrack/protocol.hpp"

#include <cctype>
#include <charconv>
#include <vector>

namespace dualtrack {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::malformed_step: return "MalformedStep";
    case ErrorCode::malformed_evaluation: return "MalformedEvaluation";
    case ErrorCode::score_out_of_range: return "ScoreOutOfRange";
    case ErrorCode::no_number_found: return "NoNumberFound";
    case ErrorCode::missing_marker: return "MissingMarker";
    case ErrorCode::precondition: return "PreconditionViolated";
    case ErrorCode::script_exhausted: return "ScriptExhausted";
    case ErrorCode::backend_error: return "BackendError";
    case ErrorCode::timeout: return "Timeout";
    case ErrorCode::unknown_rating: return "UnknownRating";
    case ErrorCode::invalid_counts: return "InvalidCounts";
    case ErrorCode::invalid_config: return "InvalidConfig";
    case ErrorCode::data_error: return "DataError";
    case ErrorCode::io_error: return "IoError";
  }
  return "Unknown";
}

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

void append_history(std::string& out, std::size_t index, std::string_view text) {
  out += "\nSTEP ";
  out += std::to_string(index);
  out += ": ";
  out += text;
}

constexpr std::string_view kRubric =
    "Rate the candidate step with an integer score from 0 to 3:\n"
    "3 = good step: arithmetic and reasoning are right, it builds on the steps above, "
    "and it gets closer to the answer.\n"
    "2 = almost good: right in substance, with a small slip or omission that does not break it.\n"
    "1 = weak or partially correct: on the right track, but with a real error or a missing "
    "piece of reasoning.\n"
    "0 = bad step: incorrect, off-topic or misleading, or a restatement of an earlier step "
    "that adds nothing.\n"
    "Reply with exactly two lines:\n"
    "Score: <0-3>\n"
    "Feedback: <one sentence telling the solver how to improve the step>";

}  // namespace

std::string_view trim_left(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && is_space(s[i])) ++i;
  return s.substr(i);
}

std::string_view trim(std::string_view s) {
  s = trim_left(s);
  std::size_t n = s.size();
  while (n > 0 && is_space(s[n - 1])) --n;
  return s.substr(0, n);
}

CanonicalNumber CanonicalNumber::from_literal(std::string_view literal) {
  std::string_view s = trim(literal);
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  auto dot = s.find('.');
  std::string_view int_part = s.substr(0, dot);
  std::string_view frac_part = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);

  auto all_digits = [](std::string_view v) {
    for (char c : v) {
      if (!is_digit(c)) return false;
    }
    return true;
  };
  if (!all_digits(int_part) || !all_digits(frac_part) || (int_part.empty() && frac_part.empty())) {
    throw Error(ErrorCode::no_number_found, "not a numeric literal: '" + std::string(literal) + "'");
  }

  while (int_part.size() > 1 && int_part.front() == '0') int_part.remove_prefix(1);
  while (!frac_part.empty() && frac_part.back() == '0') frac_part.remove_suffix(1);

  std::string text;
  text += int_part.empty() ? std::string_view("0") : int_part;
  if (!frac_part.empty()) {
    text += '.';
    text += frac_part;
  }
  if (negative && text != "0") text.insert(text.begin(), '-');
  return CanonicalNumber(std::move(text));
}

std::string_view to_string(StepKind kind) {
  return kind == StepKind::final ? "final" : "intermediate";
}

std::string_view prefix_for(StepKind kind) {
  return kind == StepKind::final ? kFinalPrefix : kStepPrefix;
}

std::string build_decomposer_prompt(std::string_view question, std::span<const std::string> history,
                                    std::optional<std::string_view> hint) {
  std::string out;
  out += kProblemHeader;
  out += question;
  out += '\n';
  out += kHistoryHeader;
  for (std::size_t i = 0; i < history.size(); ++i) append_history(out, i + 1, history[i]);
  if (hint) {
    out += '\n';
    out += kHintPrefix;
    out += ' ';
    out += *hint;
  }
  return out;
}

std::string build_decomposer_prompt(const Problem& problem, std::span<const AcceptedStep> history,
                                    std::optional<std::string_view> hint) {
  std::vector<std::string> texts;
  texts.reserve(history.size());
  for (const auto& step : history) texts.push_back(step.text);
  return build_decomposer_prompt(problem.question, texts, hint);
}

std::string build_evaluator_prompt(const Problem& problem, std::span<const AcceptedStep> history,
                                   const StepCandidate& candidate) {
  std::string out = build_decomposer_prompt(problem, history);
  out += "\nCandidate step:\n";
  out += prefix_for(candidate.kind);
  out += ' ';
  out += candidate.text;
  out += '\n';
  out += kRubric;
  return out;
}

std::string_view decomposer_system_prompt() {
  return "You solve grade-school math word problems one step at a time. "
         "Reply with exactly one line. Write \"STEP: <next computation>\" for an "
         "intermediate step, or \"FINAL_ANSWER: <number>\" once the answer is known. "
         "If a HINT line is present, use it to repair your previous attempt.";
}

std::string_view evaluator_system_prompt() {
  return "You grade one proposed reasoning step for a math word problem. "
         "Answer only with a Score line and a Feedback line.";
}

StepCandidate parse_agent_step(std::string_view raw) {
  for (std::string_view line : split_lines(raw)) {
    std::string_view t = trim_left(line);
    StepKind kind;
    std::string_view body;
    if (starts_with(t, kStepPrefix)) {
      kind = StepKind::intermediate;
      body = t.substr(kStepPrefix.size());
    } else if (starts_with(t, kFinalPrefix)) {
      kind = StepKind::final;
      body = t.substr(kFinalPrefix.size());
    } else {
      continue;
    }
    body = trim(body);
    if (body.empty()) {
      throw Error(ErrorCode::malformed_step, "step line has an empty body: '" + std::string(line) + "'");
    }
    StepCandidate candidate;
    candidate.kind = kind;
    candidate.text = std::string(body);
    candidate.raw = std::string(line);
    if (kind == StepKind::final) {
      try {
        candidate.answer = normalize_answer(body);
      } catch (const Error&) {
      }
    }
    return candidate;
  }
  throw Error(ErrorCode::malformed_step, "no STEP: or FINAL_ANSWER: line in agent output");
}

Evaluation parse_evaluation(std::string_view raw) {
  std::optional<int> score;
  std::optional<std::string> feedback;
  for (std::string_view line : split_lines(raw)) {
    std::string_view t = trim(line);
    if (!score) {
      std::string_view rest;
      bool matched = false;
      if (starts_with(t, kScorePrefix)) {
        rest = t.substr(kScorePrefix.size());
        matched = true;
      } else if (starts_with(t, kRawScorePrefix)) {
        rest = t.substr(kRawScorePrefix.size());
        matched = true;
      }
      if (matched) {
        rest = trim_left(rest);
        bool negative = false;
        if (!rest.empty() && (rest.front() == '-' || rest.front() == '+')) {
          negative = rest.front() == '-';
          rest.remove_prefix(1);
        }
        std::size_t digits = 0;
        while (digits < rest.size() && is_digit(rest[digits])) ++digits;
        if (digits > 0) {
          long long value = 0;
          auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + digits, value);
          if (ec != std::errc{} || negative || value > 3) {
            throw Error(ErrorCode::score_out_of_range,
                        "evaluator score out of range: '" + std::string(t) + "'");
          }
          score = static_cast<int>(value);
        }
      }
    }
    if (!feedback && starts_with(t, kFeedbackPrefix)) {
      feedback = std::string(trim(t.substr(kFeedbackPrefix.size())));
    }
  }
  if (!score) throw Error(ErrorCode::malformed_evaluation, "no score line in evaluator output");
  return Evaluation{*score, feedback.value_or("")};
}

CanonicalNumber normalize_answer(std::string_view text) {
  // Drop thousands separators: a comma with digits on both sides.
  std::string s;
  s.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == ',' && i > 0 && i + 1 < text.size() && is_digit(text[i - 1]) && is_digit(text[i + 1])) {
      continue;
    }
    s += text[i];
  }

  std::optional<std::string_view> last;
  std::string_view view(s);
  std::size_t i = 0;
  while (i < view.size()) {
    bool starts = is_digit(view[i]) ||
                  (view[i] == '.' && i + 1 < view.size() && is_digit(view[i + 1]));
    if (!starts) {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < view.size() && is_digit(view[i])) ++i;
    if (i + 1 < view.size() && view[i] == '.' && is_digit(view[i + 1])) {
      ++i;
      while (i < view.size() && is_digit(view[i])) ++i;
    }
    std::size_t literal_start = start;
    if (start > 0 && view[start - 1] == '-') {
      bool binary_minus = start > 1 && (std::isalnum(static_cast<unsigned char>(view[start - 2])) ||
                                        view[start - 2] == ')' || view[start - 2] == '.');
      if (!binary_minus) literal_start = start - 1;
    }
    last = view.substr(literal_start, i - literal_start);
  }
  if (!last) throw Error(ErrorCode::no_number_found, "no number in '" + std::string(text) + "'");
  return CanonicalNumber::from_literal(*last);
}

CanonicalNumber extract_gold_answer(std::string_view gsm8k_answer) {
  auto pos = gsm8k_answer.find(kGoldMarker);
  if (pos == std::string_view::npos) {
    throw Error(ErrorCode::missing_marker, "answer has no '####' marker");
  }
  std::string_view rest = gsm8k_answer.substr(pos + kGoldMarker.size());
  rest = rest.substr(0, rest.find('\n'));
  return normalize_answer(rest);
}

}  // namespace dualtrack
