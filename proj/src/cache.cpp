#include "dualtrack/cache.hpp"

#include <algorithm>
#include <cctype>

namespace dualtrack {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool in_alphabet(char c) {
  switch (c) {
    case '.': case '+': case '-': case '*': case '/': case '=': case '%': case '(': case ')':
      return true;
    default:
      return is_digit(c);
  }
}

// Nearest non-whitespace byte before position `from` (exclusive), or 0.
char prev_non_space(std::string_view s, std::size_t from) {
  while (from > 0) {
    char c = s[--from];
    if (!std::isspace(static_cast<unsigned char>(c))) return c;
  }
  return 0;
}

char next_non_space(std::string_view s, std::size_t from) {
  for (; from < s.size(); ++from) {
    if (!std::isspace(static_cast<unsigned char>(s[from]))) return s[from];
  }
  return 0;
}

}  // namespace

std::string fingerprint(std::string_view step_text) {
  // Annotation delimiters go first so "<<48/2=24>>" reads as plain math.
  std::string text;
  text.reserve(step_text.size());
  for (std::size_t i = 0; i < step_text.size(); ++i) {
    if (i + 1 < step_text.size() &&
        ((step_text[i] == '<' && step_text[i + 1] == '<') || (step_text[i] == '>' && step_text[i + 1] == '>'))) {
      ++i;
      continue;
    }
    text += step_text[i];
  }

  std::string out;
  const std::string_view s(text);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    std::size_t width = 1;
    bool times = false;
    if (c == 'x') {
      times = true;
    } else if (s.compare(i, 2, "\xC3\x97") == 0 || s.compare(i, 2, "\xC2\xB7") == 0) {
      times = true;
      width = 2;
    } else if (s.compare(i, 2, "\xC3\xB7") == 0) {
      out += '/';
      ++i;
      continue;
    }
    if (times) {
      if (is_digit(prev_non_space(s, i)) && is_digit(next_non_space(s, i + width))) out += '*';
      i += width - 1;
      continue;
    }
    if (c == '.') {
      if (i + 1 < s.size() && is_digit(s[i + 1])) out += c;
      continue;
    }
    if (in_alphabet(c)) out += c;
  }
  if (std::none_of(out.begin(), out.end(), is_digit)) out.clear();
  return out;
}

std::string_view to_string(CacheOrigin origin) {
  return origin == CacheOrigin::low_score ? "low_score" : "accepted_duplicate_source";
}

std::string_view to_string(CacheDecision decision) {
  switch (decision) {
    case CacheDecision::miss: return "miss";
    case CacheDecision::duplicate_accepted: return "duplicate_accepted";
    case CacheDecision::known_bad: return "known_bad";
  }
  return "miss";
}

CacheDecision RejectionCache::check(std::string_view fp) const {
  if (fp.empty()) return CacheDecision::miss;
  auto it = entries_.find(fp);
  if (it == entries_.end()) return CacheDecision::miss;
  return it->second == CacheOrigin::low_score ? CacheDecision::known_bad : CacheDecision::duplicate_accepted;
}

void RejectionCache::record(std::string_view fp, CacheOrigin origin) {
  if (fp.empty()) return;
  entries_.try_emplace(std::string(fp), origin);
}

Evaluation synth_rejection(CacheDecision decision) {
  switch (decision) {
    case CacheDecision::duplicate_accepted: return Evaluation{0, std::string(kDuplicateFeedback)};
    case CacheDecision::known_bad: return Evaluation{0, std::string(kKnownBadFeedback)};
    case CacheDecision::miss: break;
  }
  throw Error(ErrorCode::precondition, "synth_rejection called for a cache miss");
}

}  // namespace dualtrack
