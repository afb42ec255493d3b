#include <doctest.h>

#include <random>
#include <sstream>

#include "dualtrack/dataset.hpp"
#include "support/fixtures.hpp"

using namespace dualtrack;

namespace {

const std::string kNataliaQuestion =
    "Natalia sold clips to 48 of her friends in April, and then she sold half as many clips in May. "
    "How many clips did Natalia sell altogether in April and May?";

}  // namespace

TEST_CASE("split_solution_steps") {
  CHECK(split_solution_steps(testing::natalia().answer) ==
        std::vector<std::string>{"Natalia sold <<48/2 = 24>> clips in May.",
                                 "Natalia sold <<48 + 24 = 72>> clips altogether."});
  CHECK(split_solution_steps("#### 7").empty());
  CHECK(split_solution_steps("  a  \n\n\n b\r\n\n#### 3") == std::vector<std::string>{"a", "b"});
  CHECK_THROWS_AS(split_solution_steps("a\nb"), Error);
}

TEST_CASE("Natalia produces three instances with exact blocks") {
  const auto instances = make_instances(testing::natalia());
  REQUIRE(instances.size() == 3);

  CHECK(instances[0].id == "natalia-1");
  CHECK(instances[0].problem_block == "Problem: " + kNataliaQuestion + "\nSteps completed so far:");
  CHECK(instances[0].target == "STEP: Natalia sold <<48/2 = 24>> clips in May.");

  CHECK(instances[1].problem_block == "Problem: " + kNataliaQuestion +
                                          "\nSteps completed so far:\n"
                                          "STEP 1: Natalia sold <<48/2 = 24>> clips in May.");
  CHECK(instances[1].target == "STEP: Natalia sold <<48 + 24 = 72>> clips altogether.");

  CHECK(instances[2].problem_block == "Problem: " + kNataliaQuestion +
                                          "\nSteps completed so far:\n"
                                          "STEP 1: Natalia sold <<48/2 = 24>> clips in May.\n"
                                          "STEP 2: Natalia sold <<48 + 24 = 72>> clips altogether.");
  CHECK(instances[2].target == "FINAL_ANSWER: 72");
  CHECK(instances[2].step_index == 3);
}

TEST_CASE("Weng instance 2 matches the serialized example verbatim") {
  const auto instances = make_instances(testing::weng());
  REQUIRE(instances.size() == 3);
  CHECK(instances[1].problem_block ==
        "Problem: Weng earns $12 an hour for babysitting. Yesterday, she just did 50 minutes of babysitting. "
        "How much did she earn?\n"
        "Steps completed so far:\n"
        "STEP 1: Weng earns 12/60 = $<<12/60=0.2>>0.2 per minute.");
  CHECK(instances[1].target == "STEP: Working 50 minutes, she earned 0.2 x 50 = $<<0.2*50=10>>10.");
  CHECK(instances[2].target == "FINAL_ANSWER: 10");
}

TEST_CASE("serialized records are fixed JSON lines") {
  const auto weng = make_instances(testing::weng());
  CHECK(serialize_instance(weng[1]) ==
        R"({"id":"weng-2","problem_block":"Problem: Weng earns $12 an hour for babysitting. Yesterday, she just did )"
        R"(50 minutes of babysitting. How much did she earn?\nSteps completed so far:\nSTEP 1: Weng earns 12/60 = )"
        R"($<<12/60=0.2>>0.2 per minute.","target":"STEP: Working 50 minutes, she earned 0.2 x 50 = )"
        R"($<<0.2*50=10>>10.","step_index":2})");
  for (const auto& ex : {testing::natalia(), testing::weng()}) {
    for (const auto& instance : make_instances(ex)) {
      const auto line = serialize_instance(instance);
      CHECK(line.find('\n') == std::string::npos);
      CHECK(deserialize_instance(line) == instance);
    }
  }
  CHECK_THROWS_AS(deserialize_instance("{"), Error);
  CHECK_THROWS_AS(deserialize_instance(R"({"id":"x"})"), Error);
}

TEST_CASE("an example without steps yields only the final instance") {
  const auto instances = make_instances({"bare", "What is 7?", "#### 7"});
  REQUIRE(instances.size() == 1);
  CHECK(instances[0].problem_block == "Problem: What is 7?\nSteps completed so far:");
  CHECK(instances[0].target == "FINAL_ANSWER: 7");
}

TEST_CASE("instance structure properties on random solutions") {
  std::mt19937_64 rng(8);
  for (int n = 0; n < 300; ++n) {
    RawExample ex{"r" + std::to_string(n), "Question " + std::to_string(n) + "?", ""};
    std::vector<std::string> steps;
    const auto count = rng() % 7;
    for (std::size_t i = 0; i < count; ++i) {
      steps.push_back("step " + std::to_string(rng() % 100) + " + 1 = <<" + std::to_string(i) + ">>");
      ex.answer += (rng() % 3 == 0 ? "\n  " : "") + steps.back() + "\n";
    }
    const auto gold = rng() % 1000;
    ex.answer += "#### " + std::to_string(gold);

    const auto instances = make_instances(ex);
    REQUIRE(instances.size() == steps.size() + 1);
    std::vector<std::string> bodies;
    for (std::size_t t = 0; t < instances.size(); ++t) {
      const bool last = t + 1 == instances.size();
      CHECK(instances[t].target.starts_with(last ? "FINAL_ANSWER: " : "STEP: "));
      if (!last) bodies.push_back(instances[t].target.substr(6));
      if (t + 1 < instances.size()) {
        // The next block is this block plus exactly one history line.
        const auto& next = instances[t + 1].problem_block;
        CHECK(next.starts_with(instances[t].problem_block + "\nSTEP " + std::to_string(t + 1) + ": "));
        CHECK(next.find('\n', instances[t].problem_block.size() + 1) == std::string::npos);
      }
    }
    CHECK(bodies == steps);
    CHECK(instances.back().target == "FINAL_ANSWER: " + std::to_string(gold));
  }
}

TEST_CASE("PRM rating map") {
  CHECK(map_prm_rating(-1) == 0);
  CHECK(map_prm_rating(0) == 1);
  CHECK(map_prm_rating(1) == 3);
  CHECK_THROWS_AS(map_prm_rating(2), Error);

  std::istringstream in(R"({"text":"48/2 = 24","rating":1}
{"text":"48 + 24 = 70","rating":-1}

{"text":"hmm","rating":0}
)");
  const auto records = read_prm(in);
  REQUIRE(records.size() == 3);
  CHECK(records[0].mapped_score == 3);
  CHECK(records[1].mapped_score == 0);
  CHECK(records[2].mapped_score == 1);

  std::istringstream bad(R"({"text":"x","rating":5})");
  CHECK_THROWS_AS(read_prm(bad), Error);
}

TEST_CASE("read_gsm8k") {
  std::istringstream in(nlohmann::json{{"question", "q1"}, {"answer", "a\n#### 1"}}.dump() + "\n\n" +
                        nlohmann::json{{"id", "mine"}, {"question", "q2"}, {"answer", "#### 2"}}.dump() + "\n");
  const auto examples = read_gsm8k(in);
  REQUIRE(examples.size() == 2);
  CHECK(examples[0].id == "gsm8k-1");
  CHECK(examples[1].id == "mine");

  std::istringstream broken("{\"question\": \"q\"}\nnot json\n");
  try {
    read_gsm8k(broken);
    FAIL("expected DataError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::data_error);
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }
}

TEST_CASE("validation split is stable and roughly proportional") {
  std::size_t held_out = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto id = "ex" + std::to_string(i);
    const bool v = in_validation_split(id, 0.1, 42);
    CHECK(v == in_validation_split(id, 0.1, 42));
    held_out += v ? 1 : 0;
    CHECK_FALSE(in_validation_split(id, 0.0, 42));
    CHECK(in_validation_split(id, 1.0, 42));
  }
  CHECK(held_out > 850);
  CHECK(held_out < 1150);
}

TEST_CASE("prepare_instances keeps examples whole") {
  std::vector<RawExample> examples;
  for (int i = 0; i < 200; ++i) {
    examples.push_back({"e" + std::to_string(i), "q", "one\ntwo\n#### " + std::to_string(i)});
  }
  const auto out = prepare_instances(examples, 0.25, 3);
  CHECK(out.stats.examples == 200);
  CHECK(out.stats.instances == 600);
  CHECK(out.train.size() + out.validation.size() == 600);
  CHECK(out.stats.train_examples + out.stats.validation_examples == 200);
  CHECK(out.validation.size() == out.stats.validation_examples * 3);
  for (const auto& v : out.validation) {
    const auto example_id = v.id.substr(0, v.id.rfind('-'));
    CHECK(in_validation_split(example_id, 0.25, 3));
  }
  CHECK(out.stats.mean_steps_per_example == doctest::Approx(2.0));

  const auto none = prepare_instances(examples, 0.0, 3);
  CHECK(none.validation.empty());
}

TEST_CASE("fnv1a64 reference values") {
  // Published FNV-1a 64-bit test vectors.
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}
