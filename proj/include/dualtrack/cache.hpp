#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>

#include "dualtrack/protocol.hpp"

namespace dualtrack {

// Lexical math fingerprint of a step: the digits and arithmetic symbols
// (0-9 . + - * / = % ( )) in their original order.
//
//  - "<<" / ">>" annotation delimiters are dropped, their content kept;
//  - 'x', U+00D7 and U+00B7 between digits become '*', U+00F7 becomes '/';
//  - '.' survives only when a digit follows it;
//  - a result without any digit is empty (the step has no math content).
std::string fingerprint(std::string_view step_text);

enum class CacheOrigin { accepted_duplicate_source, low_score };
enum class CacheDecision { miss, duplicate_accepted, known_bad };

std::string_view to_string(CacheOrigin origin);
std::string_view to_string(CacheDecision decision);

// Per-problem store of fingerprints. Empty fingerprints are never stored or
// matched; the first origin recorded for a fingerprint wins.
class RejectionCache {
 public:
  CacheDecision check(std::string_view fp) const;
  void record(std::string_view fp, CacheOrigin origin);
  void clear() { entries_.clear(); }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  // Ordered by fingerprint.
  const std::map<std::string, CacheOrigin, std::less<>>& entries() const { return entries_; }

 private:
  std::map<std::string, CacheOrigin, std::less<>> entries_;
};

inline constexpr std::string_view kDuplicateFeedback =
    "This repeats an earlier computation; work out a quantity that has not been computed yet.";
inline constexpr std::string_view kKnownBadFeedback =
    "This step matches one already rated poorly; try a different calculation.";

// Score-0 evaluation standing in for an evaluator call. Throws a precondition
// error for CacheDecision::miss.
Evaluation synth_rejection(CacheDecision decision);

}  // namespace dualtrack
