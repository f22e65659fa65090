#include <doctest.h>

#include <random>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "tutor/errors.hpp"
#include "tutor/sensory.hpp"

using namespace tutor;
using nlohmann::json;

namespace {

const KeywordDictionary& dict() { return default_dictionary(); }

}  // namespace

TEST_CASE("normalize_text lowercases, folds quotes and collapses whitespace") {
  CHECK(normalize_text("  I CAN’T   do\tTHIS  ") == "i can't do this");
  CHECK(normalize_text("") == "");
}

TEST_CASE("route picks the category with the most distinct keyword matches") {
  CHECK(route("I keep getting fraction addition wrong...", dict()) == IntentCategory::math);
  CHECK(route("I just failed my math quiz... I don't want to study anything.", dict()) ==
        IntentCategory::emotional);
  CHECK(route("Whoa it floats with salt! Why?", dict()) == IntentCategory::science);
  CHECK(route("I memorized the whole poem but I don't know what it means.", dict()) ==
        IntentCategory::chinese);
  CHECK(route("The big test is tomorrow and my mind is blank!", dict()) == IntentCategory::emotional);
  CHECK(route("OK science time! We're learning density today.", dict()) == IntentCategory::science);
}

TEST_CASE("route falls back to general and breaks ties by category order") {
  CHECK(route("zzz qqq", dict()) == IntentCategory::general);
  KeywordDictionary d;
  d.intent_keywords[IntentCategory::science] = {"alpha"};
  d.intent_keywords[IntentCategory::math] = {"beta"};
  CHECK(route("alpha beta", d) == IntentCategory::math);
  CHECK(route("alpha", d) == IntentCategory::science);
  CHECK_THROWS_AS(route("   ", d), PreconditionError);
}

TEST_CASE("route is keyword-monotone: adding a category keyword never lowers its count") {
  std::mt19937_64 rng(3);
  for (auto cat : kAllIntents) {
    const auto it = dict().intent_keywords.find(cat);
    if (it == dict().intent_keywords.end() || it->second.empty()) continue;
    for (int i = 0; i < 50; ++i) {
      std::string msg = test::random_message(rng);
      // Saturate with every keyword of the category: it must then win or tie with an earlier one.
      for (const auto& k : it->second) msg += " " + k;
      const auto routed = route(msg, dict());
      const auto pos = [](IntentCategory c) {
        return std::find(std::begin(kAllIntents), std::end(kAllIntents), c) - std::begin(kAllIntents);
      };
      CHECK(pos(routed) <= pos(cat));
    }
  }
}

TEST_CASE("Case 1 opening message yields frustration, fractions and no bloom evidence") {
  const auto s = extract_signals("I keep getting fraction addition wrong...", dict());
  CHECK(s.frustration_hits == 1);
  CHECK(s.weak_topic_hits == std::set<std::string>{"fractions"});
  CHECK(s.bloom_hits.empty());
  CHECK(dominant_mood(s.mood_hits) == Mood::frustrated);
}

TEST_CASE("bloom evidence from question forms") {
  CHECK(extract_signals("like 1/3 + 1/4", dict()).bloom_hits == std::set{BloomLevel::apply});
  CHECK(extract_signals("Why does it float?", dict()).bloom_hits.contains(BloomLevel::understand));
  CHECK(extract_signals("I memorized the poem", dict()).bloom_hits == std::set{BloomLevel::remember});
}

TEST_CASE("engagement, reflection and strategy markers") {
  const auto s = extract_signals("Whoa, interesting! Let me think... I realized it.", dict());
  CHECK(s.engagement_hits == 1);
  CHECK(s.reflection_hits == 1);
  CHECK(extract_signals("Can you guide me step by step?", dict()).strategy_hit == StrategyPreference::guided);
  CHECK(extract_signals("guide me, no wait, let me try on my own", dict()).strategy_hit ==
        StrategyPreference::exploratory);
  CHECK_FALSE(extract_signals("hello there", dict()).strategy_hit);
}

TEST_CASE("an error marker without a topic keyword flags no weak topic") {
  const auto s = extract_signals("I got it wrong again", dict());
  CHECK(s.weak_topic_hits.empty());
  CHECK(s.frustration_hits == 1);
}

TEST_CASE("questions are counted once per message") {
  CHECK(extract_signals("why? why? why?", dict()).question_count == 1);
  CHECK(extract_signals("ok", dict()).question_count == 0);
}

TEST_CASE("dominant mood tie-break prefers frustration") {
  CHECK(dominant_mood({{Mood::engaged, 2}, {Mood::frustrated, 2}}) == Mood::frustrated);
  CHECK(dominant_mood({{Mood::engaged, 3}, {Mood::frustrated, 2}}) == Mood::engaged);
  CHECK_FALSE(dominant_mood({}));
}

TEST_CASE("merge is order-independent apart from the strategy hit") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    auto a = extract_signals(test::random_message(rng), dict());
    auto b = extract_signals(test::random_message(rng), dict());
    a.strategy_hit.reset();
    b.strategy_hit.reset();
    auto ab = a;
    ab.merge(b);
    auto ba = b;
    ba.merge(a);
    CHECK(ab == ba);
  }
}

TEST_CASE("dictionary JSON round-trips and rejects conflicting phrases") {
  const auto j = dict().to_json();
  const auto back = KeywordDictionary::from_json(j);
  CHECK(back.to_json() == j);

  auto bad = j;
  bad["bloom_patterns"]["create"].push_back("why");
  CHECK_THROWS_AS(KeywordDictionary::from_json(bad), ConfigError);
}

TEST_CASE("shipped dictionary loads from disk and matches the embedded copy") {
  const auto d = load_dictionary(test::data_dir() / "dictionary" / "en.json");
  CHECK(d.to_json() == dict().to_json());
  CHECK_THROWS_AS(load_dictionary(test::data_dir() / "nope.json"), ConfigError);
}
