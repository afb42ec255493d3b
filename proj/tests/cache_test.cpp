#include <doctest.h>

#include <random>
#include <regex>

#include "dualtrack/cache.hpp"
#include "support/properties.hpp"

using namespace dualtrack;

TEST_CASE("fingerprint examples") {
  CHECK(fingerprint("Henry traveled 60 - 45 = 15 miles between his first and second stops.") == "60-45=15");
  CHECK(fingerprint("Natalia sold <<48/2 = 24>> clips in May.") == "48/2=24");
  CHECK(fingerprint("She walked to the store.") == "");
  CHECK(fingerprint("10 + 20 = 30") != fingerprint("10 + 20 = 40"));
}

TEST_CASE("fingerprint normalization rules") {
  SUBCASE("multiplication and division signs") {
    CHECK(fingerprint("0.2 x 50") == "0.2*50");
    CHECK(fingerprint("3x4") == "3*4");
    CHECK(fingerprint("3 \xC3\x97 4") == "3*4");
    CHECK(fingerprint("3\xC2\xB7" "4") == "3*4");
    CHECK(fingerprint("12 \xC3\xB7 4 = 3") == "12/4=3");
    CHECK(fingerprint("6 boxes") == "6");
  }
  SUBCASE("currency and thousands separators vanish") {
    CHECK(fingerprint("She paid $1,200 for it") == "1200");
  }
  SUBCASE("sentence periods are dropped, decimal points kept") {
    CHECK(fingerprint("It costs 2.50 dollars.") == "2.50");
    CHECK(fingerprint("So 7. Then 8.") == "78");
  }
  SUBCASE("a full annotated solution line keeps prose math and annotation") {
    CHECK(fingerprint("Weng earns 12/60 = $<<12/60=0.2>>0.2 per minute.") == "12/60=12/60=0.20.2");
    CHECK(fingerprint("Working 50 minutes, she earned 0.2 x 50 = $<<0.2*50=10>>10.") == "500.2*50=0.2*50=1010");
  }
  SUBCASE("punctuation without digits is not math") {
    CHECK(fingerprint("a well-known (simple) idea") == "");
  }
}

TEST_CASE("fingerprint output stays inside the alphabet and is idempotent") {
  const std::regex allowed("^[0-9.+\\-*/=%()]*$");
  std::mt19937_64 rng(21);
  const std::string chars = "abcxyz ABC0123456789.,$+-*/=%()<>\t\n";
  for (int i = 0; i < 2000; ++i) {
    std::string text;
    const auto len = rng() % 60;
    for (std::size_t j = 0; j < len; ++j) text += chars[rng() % chars.size()];
    const auto fp = fingerprint(text);
    CHECK(std::regex_match(fp, allowed));
    CHECK(fingerprint(fp) == fp);
  }
}

TEST_CASE("phrasing invariance and digit sensitivity") {
  const auto phrasing = testing::check_phrasing_invariance(1000, 101);
  INFO(phrasing.first_failure);
  CHECK(phrasing.failures == 0);
  const auto digits = testing::check_digit_sensitivity(1000, 202);
  INFO(digits.first_failure);
  CHECK(digits.failures == 0);
}

TEST_CASE("rejection cache check and record") {
  RejectionCache cache;
  CHECK(cache.check("1+2=3") == CacheDecision::miss);
  CHECK(cache.check("") == CacheDecision::miss);

  cache.record("1+2=3", CacheOrigin::accepted_duplicate_source);
  CHECK(cache.check("1+2=3") == CacheDecision::duplicate_accepted);

  cache.record("4-1=3", CacheOrigin::low_score);
  CHECK(cache.check("4-1=3") == CacheDecision::known_bad);

  cache.record("", CacheOrigin::low_score);
  CHECK(cache.size() == 2);
  CHECK(cache.check("") == CacheDecision::miss);

  cache.record("4-1=3", CacheOrigin::low_score);
  CHECK(cache.size() == 2);

  cache.clear();
  CHECK(cache.empty());
}

TEST_CASE("first recorded origin wins in both insertion orders") {
  for (auto first : {CacheOrigin::accepted_duplicate_source, CacheOrigin::low_score}) {
    const auto second =
        first == CacheOrigin::low_score ? CacheOrigin::accepted_duplicate_source : CacheOrigin::low_score;
    RejectionCache cache;
    cache.record("5*5=25", first);
    cache.record("5*5=25", second);
    CHECK(cache.size() == 1);
    CHECK(cache.entries().at("5*5=25") == first);
    CHECK(cache.check("5*5=25") ==
          (first == CacheOrigin::low_score ? CacheDecision::known_bad : CacheDecision::duplicate_accepted));
  }
}

TEST_CASE("separate caches do not share entries") {
  RejectionCache a;
  RejectionCache b;
  a.record("9+9=18", CacheOrigin::accepted_duplicate_source);
  CHECK(b.check("9+9=18") == CacheDecision::miss);
}

TEST_CASE("synthesized rejections") {
  CHECK(synth_rejection(CacheDecision::duplicate_accepted) ==
        Evaluation{0, "This repeats an earlier computation; work out a quantity that has not been computed yet."});
  const auto bad = synth_rejection(CacheDecision::known_bad);
  CHECK(bad.score == 0);
  CHECK(bad.feedback.find("rated poorly") != std::string::npos);
  CHECK_THROWS_AS(synth_rejection(CacheDecision::miss), Error);
}
