#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "tutor/errors.hpp"
#include "tutor/profile.hpp"

using namespace tutor;
using nlohmann::json;

TEST_CASE("adjust_trait clamps to the unit interval") {
  CHECK(adjust_trait(UnitTrait(0.5), 0.1).value() == doctest::Approx(0.6));
  CHECK(adjust_trait(UnitTrait(0.95), 0.1).value() == 1.0);
  CHECK(adjust_trait(UnitTrait(0.05), -0.1).value() == 0.0);
  CHECK(adjust_trait(UnitTrait(0.0), -0.5).value() == 0.0);
  CHECK(UnitTrait(1.7).value() == 1.0);
  CHECK(UnitTrait(-3.0).value() == 0.0);
  CHECK_THROWS_AS(UnitTrait(std::numeric_limits<double>::quiet_NaN()), PreconditionError);
}

TEST_CASE("adjust_trait matches min(1, max(0, t + d)) on random inputs") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> t(0.0, 1.0);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (int i = 0; i < 5000; ++i) {
    const double a = t(rng);
    const double b = d(rng);
    const double want = std::min(1.0, std::max(0.0, a + b));
    const double got = adjust_trait(UnitTrait(a), b).value();
    REQUIRE(got == want);
    REQUIRE(got >= 0.0);
    REQUIRE(got <= 1.0);
  }
}

TEST_CASE("max_bloom agrees with a brute-force ordinal maximum") {
  for (unsigned mask = 1; mask < 64; ++mask) {
    std::set<BloomLevel> levels;
    int best = 0;
    for (int i = 0; i < 6; ++i) {
      if (mask & (1u << i)) {
        levels.insert(static_cast<BloomLevel>(i + 1));
        best = i + 1;
      }
    }
    CHECK(ordinal(max_bloom(levels)) == best);
  }
  CHECK_THROWS_AS(max_bloom({}), PreconditionError);
}

TEST_CASE("bloom, mood and strategy names round-trip") {
  for (auto b : kAllBloomLevels) CHECK(parse_bloom_level(to_string(b)) == b);
  for (auto m : kAllMoods) CHECK(parse_mood(to_string(m)) == m);
  for (auto s : {StrategyPreference::unset, StrategyPreference::guided, StrategyPreference::exploratory}) {
    CHECK(parse_strategy_preference(to_string(s)) == s);
  }
  CHECK_FALSE(parse_bloom_level("synthesize"));
  CHECK(ordinal(BloomLevel::remember) == 1);
  CHECK(ordinal(BloomLevel::create) == 6);
}

TEST_CASE("default profile has neutral starting values") {
  const auto p = default_profile("amy", 3, {"math"}, "fractions");
  CHECK(p.cognitive.bloom_level == BloomLevel::remember);
  CHECK(p.cognitive.weak_topics.empty());
  CHECK(p.emotional.self_efficacy.value() == 0.5);
  CHECK(p.emotional.motivation.value() == 0.5);
  CHECK(p.emotional.current_mood == Mood::neutral);
  CHECK(p.emotional.frustration_count == 0);
  CHECK(p.metacognitive.self_regulation.value() == 0.5);
  CHECK(p.metacognitive.reflection_ability.value() == 0.5);
  CHECK(p.metacognitive.preferred_strategy == StrategyPreference::unset);
  CHECK(p.behavioral.session_count == 0);
  CHECK(p.contextual.grade == 3);
  CHECK(p.contextual.subject_focus == std::vector<std::string>{"math"});
  CHECK(p.contextual.learning_goal == "fractions");
  CHECK_NOTHROW(validate(p));
}

TEST_CASE("default profile rejects grades outside 1-12") {
  CHECK_THROWS_AS(default_profile("x", 0, {}, ""), PreconditionError);
  CHECK_THROWS_AS(default_profile("x", 13, {}, ""), PreconditionError);
  CHECK_NOTHROW(default_profile("x", 1, {}, ""));
  CHECK_NOTHROW(default_profile("x", 12, {}, ""));
}

TEST_CASE("validate requires knowledge tracing for every weak topic") {
  auto p = default_profile("x", 4, {}, "");
  p.cognitive.weak_topics.insert("fractions");
  CHECK_THROWS_AS(validate(p), PreconditionError);
  p.cognitive.knowledge_tracing["fractions"] = UnitTrait(0.4);
  CHECK_NOTHROW(validate(p));
}

TEST_CASE("profile JSON uses the documented field names") {
  const auto p = default_profile("amy", 3, {"math"}, "goal", from_millis(1234));
  const json j = p;
  CHECK(j.at("student_id") == "amy");
  CHECK(j.at("updated_at") == 1234);
  CHECK(j.at("cognitive").at("bloom_level") == "remember");
  for (const char* k : {"knowledge_state", "weak_topics", "knowledge_tracing"}) CHECK(j.at("cognitive").contains(k));
  for (const char* k : {"session_count", "question_frequency", "tool_usage"}) CHECK(j.at("behavioral").contains(k));
  for (const char* k : {"current_mood", "self_efficacy", "motivation", "frustration_count"}) {
    CHECK(j.at("emotional").contains(k));
  }
  for (const char* k : {"self_regulation", "preferred_strategy", "reflection_ability"}) {
    CHECK(j.at("metacognitive").contains(k));
  }
  for (const char* k : {"grade", "subject_focus", "learning_goal"}) CHECK(j.at("contextual").contains(k));
}

TEST_CASE("profile JSON round-trips random profiles exactly") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const auto p = test::random_profile(rng, "s" + std::to_string(i));
    const json j = p;
    const auto back = j.get<LearnerProfile>();
    CHECK(back == p);
    CHECK(json(back).dump() == j.dump());
  }
}

TEST_CASE("missing fields default and unknown fields survive") {
  const json j = {{"student_id", "old"},
                  {"cognitive", {{"bloom_level", "apply"}, {"weak_topics", {"decimals"}}, {"future_field", 3}}},
                  {"emotional", {{"self_efficacy", 0.2}}},
                  {"contextual", {{"grade", 5}}}};
  const auto p = j.get<LearnerProfile>();
  CHECK(p.cognitive.bloom_level == BloomLevel::apply);
  CHECK(p.cognitive.knowledge_tracing.at("decimals").value() == 0.5);
  CHECK(p.emotional.self_efficacy.value() == 0.2);
  CHECK(p.emotional.motivation.value() == 0.5);
  CHECK(p.metacognitive.reflection_ability.value() == 0.5);
  CHECK(json(p).at("cognitive").at("future_field") == 3);
}

TEST_CASE("out-of-range stored traits are clamped on load") {
  const json j = {{"student_id", "x"}, {"emotional", {{"self_efficacy", 1.4}, {"motivation", -0.2}}},
                  {"contextual", {{"grade", 2}}}};
  const auto p = j.get<LearnerProfile>();
  CHECK(p.emotional.self_efficacy.value() == 1.0);
  CHECK(p.emotional.motivation.value() == 0.0);
}
