#include <doctest.h>

#include <filesystem>
#include <random>
#include <thread>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "tutor/errors.hpp"
#include "tutor/store.hpp"

using namespace tutor;
using nlohmann::json;

namespace {

struct TempDir {
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("tutor-store-" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::filesystem::path path;
};

void round_trip(Store& store) {
  std::mt19937_64 rng(41);
  std::vector<LearnerProfile> saved;
  for (int i = 0; i < 100; ++i) {
    saved.push_back(test::random_profile(rng, "student-" + std::to_string(i) + (i % 7 == 0 ? "-学生" : "")));
    store.save_profile(saved.back());
  }
  CHECK(store.student_ids().size() == 100);
  for (const auto& p : saved) {
    const auto back = store.load_profile(p.student_id);
    REQUIRE(back);
    CHECK(*back == p);
    CHECK(json(*back).dump() == json(p).dump());
  }
  CHECK_FALSE(store.load_profile("nobody"));
}

void memories(Store& store) {
  for (int i = 0; i < 5; ++i) {
    store.append_memory({"amy", MemoryCategory::session_summary, "s" + std::to_string(i), from_millis(1000 + i)});
  }
  store.append_memory({"amy", MemoryCategory::student_profile, "name: Amy", from_millis(10)});
  store.append_memory({"bob", MemoryCategory::session_summary, "other", from_millis(5000)});
  const auto got = store.list_memories("amy", MemoryCategory::session_summary);
  REQUIRE(got.size() == 5);
  CHECK(got.front().content == "s4");
  CHECK(got.back().content == "s0");
  CHECK(store.list_memories("amy", MemoryCategory::student_profile).size() == 1);
  CHECK(store.list_memories("amy", MemoryCategory::skill_memory).empty());
  CHECK_THROWS_AS(store.append_memory({"amy", MemoryCategory::skill_memory, "", from_millis(1)}),
                  PreconditionError);
}

ProfileRow legacy_row() {
  // Written before `question_total`, `reflection_ability` and `learning_goal` existed.
  return {"legacy",
          R"({"bloom_level":"apply","weak_topics":["fractions"],"knowledge_state":{}})",
          R"({"session_count":4,"question_frequency":1.5,"tool_usage":{}})",
          R"({"current_mood":"curious","self_efficacy":0.7,"motivation":0.6,"frustration_count":1})",
          R"({"self_regulation":0.4,"preferred_strategy":"guided","x_new":true})",
          R"({"grade":6,"subject_focus":["math"]})",
          42};
}

void check_legacy(const Store& store) {
  const auto p = store.load_profile("legacy");
  REQUIRE(p);
  CHECK(p->cognitive.bloom_level == BloomLevel::apply);
  CHECK(p->cognitive.knowledge_tracing.at("fractions").value() == 0.5);
  CHECK(p->behavioral.question_total == 0);
  CHECK(p->metacognitive.reflection_ability.value() == 0.5);
  CHECK(p->contextual.learning_goal.empty());
  CHECK(json(*p).at("metacognitive").at("x_new") == true);
  CHECK(p->updated_at == from_millis(42));
}

}  // namespace

TEST_CASE("in-memory store round-trips profiles and memories") {
  InMemoryStore s;
  round_trip(s);
  memories(s);
  s.put_row(legacy_row());
  check_legacy(s);
}

TEST_CASE("sqlite store round-trips profiles and memories") {
  TempDir dir;
  SqliteStore s(dir.path / "tutor.db");
  round_trip(s);
  memories(s);
  s.put_row(legacy_row());
  check_legacy(s);
}

TEST_CASE("sqlite data survives reopening") {
  TempDir dir;
  const auto file = dir.path / "nested" / "tutor.db";
  const auto p = default_profile("amy", 3, {"math"}, "g", from_millis(5));
  {
    SqliteStore s(file);
    s.save_profile(p);
    s.append_memory({"amy", MemoryCategory::learning_progress, "did fractions", from_millis(6)});
  }
  SqliteStore again(file);
  CHECK(again.load_profile("amy") == p);
  CHECK(again.list_memories("amy", MemoryCategory::learning_progress).size() == 1);
}

TEST_CASE("saving is an upsert") {
  InMemoryStore s;
  auto p = default_profile("amy", 3, {}, "");
  s.save_profile(p);
  p.emotional.self_efficacy = UnitTrait(0.1);
  s.save_profile(p);
  CHECK(s.student_ids().size() == 1);
  CHECK(s.load_profile("amy")->emotional.self_efficacy.value() == 0.1);
}

TEST_CASE("invalid profiles are rejected before writing") {
  InMemoryStore s;
  auto p = default_profile("amy", 3, {}, "");
  p.cognitive.weak_topics.insert("x");
  CHECK_THROWS_AS(s.save_profile(p), PreconditionError);
  CHECK(s.student_ids().empty());
}

TEST_CASE("corrupt rows surface as storage errors") {
  InMemoryStore s;
  auto row = legacy_row();
  row.emotional = "{not json";
  s.put_row(row);
  CHECK_THROWS_AS(s.load_profile("legacy"), StorageError);
}

TEST_CASE("concurrent writers do not lose memories") {
  TempDir dir;
  SqliteStore s(dir.path / "tutor.db");
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&s, t] {
      for (int i = 0; i < 25; ++i) {
        s.append_memory({"amy", MemoryCategory::skill_memory, std::to_string(t * 100 + i), from_millis(i)});
      }
    });
  }
  for (auto& th : threads) th.join();
  CHECK(s.list_memories("amy", MemoryCategory::skill_memory).size() == 100);
}

TEST_CASE("memory category names") {
  CHECK(parse_memory_category("session_summary") == MemoryCategory::session_summary);
  CHECK_FALSE(parse_memory_category("diary"));
  CHECK(to_string(MemoryCategory::skill_memory) == "skill_memory");
}

TEST_CASE("open_store picks the backend") {
  CHECK(dynamic_cast<InMemoryStore*>(open_store(":memory:").get()) != nullptr);
  TempDir dir;
  CHECK(dynamic_cast<SqliteStore*>(open_store((dir.path / "a.db").string()).get()) != nullptr);
}
