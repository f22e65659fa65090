#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "tutor/errors.hpp"
#include "tutor/mock_provider.hpp"
#include "tutor/orchestrator.hpp"

using namespace tutor;
using nlohmann::json;

namespace {

struct Harness {
  explicit Harness(MockScript script = {}) : responder(std::make_shared<MockResponder>(std::move(script))) {
    EngineDependencies deps;
    deps.store = store;
    deps.transport = std::make_shared<MockTransport>(responder);
    deps.sleeper = [](std::chrono::milliseconds) {};
    deps.clock = [this] { return from_millis(1000 * ++ticks); };
    engine = std::make_unique<Engine>(EngineConfig{}, deps);
  }

  LearnerProfile seed(const std::string& id, double efficacy = 0.5) {
    auto p = default_profile(id, 4, {"math"}, "fractions");
    p.emotional.self_efficacy = UnitTrait(efficacy);
    store->save_profile(p);
    return p;
  }

  std::shared_ptr<InMemoryStore> store = std::make_shared<InMemoryStore>();
  std::shared_ptr<MockResponder> responder;
  std::atomic<std::int64_t> ticks{0};
  std::unique_ptr<Engine> engine;
};

struct TempDir {
  TempDir() {
    path = std::filesystem::temp_directory_path() / ("tutor-orch-" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::filesystem::path path;
};

bool has_path(const ProfileDelta& d, const std::string& path) {
  return std::any_of(d.entries.begin(), d.entries.end(), [&](const DeltaEntry& e) { return e.path == path; });
}

WizardAnswers good_answers() {
  return {"mock", "gentle", "detailed", "Amy Chen", 3, {"math", "science"}, "add fractions"};
}

}  // namespace

TEST_CASE("case fixtures replay with every expectation met") {
  for (int i = 1; i <= 5; ++i) {
    const auto report = run_replay_file(test::data_dir() / "fixtures" / ("case" + std::to_string(i) + ".json"));
    for (const auto& t : report.turns) {
      for (const auto& f : t.failures) FAIL_CHECK(report.name << " turn " << t.index << ": " << f);
    }
    CHECK(report.passed());
  }
}

TEST_CASE("replay is byte-identical across runs") {
  const auto path = test::data_dir() / "fixtures" / "case1.json";
  CHECK(run_replay_file(path).transcript().dump() == run_replay_file(path).transcript().dump());
}

TEST_CASE("a failing expectation is reported, not swallowed") {
  std::ifstream in(test::data_dir() / "fixtures" / "case1.json");
  auto fixture = json::parse(in);
  fixture["turns"][0]["expect"]["fired_exclude"] = {"R1"};
  const auto report = run_replay(fixture);
  CHECK_FALSE(report.passed());
  CHECK(report.turns[0].failures.size() == 1);
}

TEST_CASE("the strategy on a turn already reflects that turn's update") {
  Harness h;
  h.seed("amy", 0.35);
  const auto s = h.engine->open_session("amy");
  const auto r = h.engine->handle_turn(s, "I keep getting fraction addition wrong...");
  CHECK(r.strategy.fired.front() == "R1");
  CHECK(r.strategy.fired == test::expected_rules(h.engine->profile("amy")));
  CHECK(r.prompt.system_prompt.find("Self-efficacy: 0.25") != std::string::npos);
  CHECK(r.reply == "[mock] I keep getting fraction addition wrong...");
  const auto req = h.responder->requests().back();
  CHECK(req.body.at("messages").at(0).at("role") == "system");
  CHECK(req.body.at("messages").at(0).at("content") == r.prompt.system_prompt);
}

TEST_CASE("blank user text is rejected without touching state") {
  Harness h;
  h.seed("amy");
  const auto s = h.engine->open_session("amy");
  const auto before = h.engine->profile("amy");
  CHECK_THROWS_AS(h.engine->handle_turn(s, ""), PreconditionError);
  CHECK_THROWS_AS(h.engine->handle_turn(s, "  \n\t"), PreconditionError);
  CHECK(h.engine->profile("amy") == before);
  CHECK(h.engine->session(s).user_messages.empty());
  CHECK(h.responder->request_count() == 0);
}

TEST_CASE("unknown sessions and learners") {
  Harness h;
  CHECK_THROWS_AS(h.engine->open_session("ghost"), NotFoundError);
  CHECK_THROWS_AS(h.engine->handle_turn("session-99", "hi"), NotFoundError);
  CHECK_THROWS_AS(h.engine->close_session("session-99"), NotFoundError);
}

TEST_CASE("session counter and summaries") {
  Harness h;
  h.seed("amy");
  for (int i = 0; i < 6; ++i) {
    const auto s = h.engine->open_session("amy");
    if (i % 2 == 0) h.engine->handle_turn(s, "what is a fraction?");
    h.engine->close_session(s);
    CHECK_THROWS_AS(h.engine->handle_turn(s, "hello"), NotFoundError);
  }
  CHECK(h.engine->profile("amy").behavioral.session_count == 6);
  const auto summaries = h.store->list_memories("amy", MemoryCategory::session_summary);
  CHECK(summaries.size() == 6);
  CHECK(summaries.front().content.find("turn(s)") != std::string::npos);
}

TEST_CASE("switching subjects mid-session keeps one shared profile") {
  Harness h;
  h.seed("amy", 0.35);
  const auto s = h.engine->open_session("amy");
  const auto math = h.engine->handle_turn(s, "I keep getting fraction addition wrong...");
  CHECK(math.subject == IntentCategory::math);
  const auto sci = h.engine->handle_turn(s, "OK science time! We're learning density today.");
  CHECK(sci.subject == IntentCategory::science);
  CHECK(h.engine->session(s).active_subject == IntentCategory::science);
  CHECK(std::find(sci.strategy.fired.begin(), sci.strategy.fired.end(), "R1") != sci.strategy.fired.end());
  CHECK_FALSE(has_path(sci.delta, "/emotional/frustration_count"));
  CHECK(h.store->student_ids() == std::vector<std::string>{"amy"});
}

TEST_CASE("earlier messages are never counted twice") {
  Harness h;
  h.seed("amy");
  const auto s = h.engine->open_session("amy");
  h.engine->handle_turn(s, "this is wrong");
  h.engine->handle_turn(s, "hello");
  h.engine->handle_turn(s, "hello again");
  CHECK(h.engine->profile("amy").emotional.frustration_count == 1);
  CHECK(h.engine->profile("amy").emotional.self_efficacy.value() == doctest::Approx(0.4));
}

TEST_CASE("a failed model call keeps the profile update") {
  Harness h;
  h.seed("amy");
  const auto s = h.engine->open_session("amy");
  h.responder->inject_failures({{503, {}}, {503, {}}, {503, {}}});
  CHECK_THROWS_AS(h.engine->handle_turn(s, "this is wrong"), TransportError);
  CHECK(h.engine->profile("amy").emotional.frustration_count == 1);
  CHECK(h.engine->session(s).history.empty());
  const auto next = h.engine->handle_turn(s, "ok let's continue");
  CHECK_FALSE(has_path(next.delta, "/emotional/frustration_count"));
  CHECK(h.engine->profile("amy").emotional.frustration_count == 1);
  const auto st = h.engine->session(s);
  REQUIRE(st.history.size() == 2);
  CHECK(st.history[0].role == Role::user);
  CHECK(st.history[1].role == Role::assistant);
}

TEST_CASE("history alternates user and assistant after the system prompt") {
  Harness h;
  h.seed("amy");
  const auto s = h.engine->open_session("amy");
  for (const char* m : {"hello", "what is density?", "cool"}) h.engine->handle_turn(s, m);
  const auto last = h.responder->requests().back().body.at("messages");
  REQUIRE(last.size() == 6);
  CHECK(last[0]["role"] == "system");
  for (std::size_t i = 1; i < last.size(); ++i) CHECK(last[i]["role"] == (i % 2 == 1 ? "user" : "assistant"));
  CHECK(h.engine->session(s).last_prompt == last[0]["content"]);
}

TEST_CASE("tool use is recorded on the learner") {
  Harness h;
  h.seed("amy");
  const auto s = h.engine->open_session("amy");
  CHECK(h.engine->use_tool(s, "calculator", {{"expression", "3 * 4"}}) == "12");
  CHECK(h.engine->profile("amy").behavioral.tool_usage.at("calculator") == 1);
  CHECK_THROWS_AS(h.engine->use_tool(s, "calculator", {{"expression", "2;2"}}), ParseError);
  CHECK(h.engine->profile("amy").behavioral.tool_usage.at("calculator") == 1);
}

TEST_CASE("concurrent sessions of one learner serialize their writes") {
  Harness h;
  h.seed("amy");
  std::vector<std::string> sessions;
  for (int i = 0; i < 4; ++i) sessions.push_back(h.engine->open_session("amy"));
  std::vector<std::thread> threads;
  for (const auto& s : sessions) {
    threads.emplace_back([&h, s] {
      for (int i = 0; i < 10; ++i) h.engine->handle_turn(s, "this is wrong");
    });
  }
  for (auto& t : threads) t.join();
  const auto p = h.engine->profile("amy");
  CHECK(p.emotional.frustration_count == 40);
  CHECK(p.emotional.self_efficacy.value() == 0.0);
  CHECK(p.behavioral.session_count == 4);
}

TEST_CASE("engine config round-trips and never stores keys") {
  EngineConfig c;
  c.provider = "glm";
  c.prompt.teaching_style = "gentle";
  c.policy.kt_step = 0.2;
  c.store_path = "/tmp/x.db";
  c.assessment.weights[Dimension::cognitive] = 0.4;
  c.assessment.weights[Dimension::contextual] = 0.0;
  const json j = c;
  const auto back = j.get<EngineConfig>();
  CHECK(back.provider == "glm");
  CHECK(back.prompt.teaching_style == "gentle");
  CHECK(back.policy == c.policy);
  CHECK(back.store_path == "/tmp/x.db");
  CHECK(back.assessment.weights == c.assessment.weights);
  CHECK(back.providers.size() == c.providers.size());
  CHECK(j.dump().find("Bearer") == std::string::npos);
  CHECK(json::object().get<EngineConfig>().provider == "mock");
}

TEST_CASE("engine rejects unknown providers and bad policies") {
  EngineConfig c;
  c.provider = "nope";
  CHECK_THROWS_AS(Engine(c, {std::make_shared<InMemoryStore>(), nullptr, {}, {}, {}}), ConfigError);
  EngineConfig d;
  d.policy.efficacy_step = 0.9;
  CHECK_THROWS_AS(Engine(d, {std::make_shared<InMemoryStore>(), nullptr, {}, {}, {}}), ConfigError);
}

TEST_CASE("setup wizard: first run, validation and rerun") {
  TempDir dir;
  const auto config_path = dir.path / "config.json";
  EngineConfig base;
  base.store_path = (dir.path / "tutor.db").string();

  auto bad = good_answers();
  bad.grade = 13;
  try {
    run_setup_wizard(bad, config_path, base);
    FAIL("expected a wizard error");
  } catch (const WizardStepError& e) {
    CHECK(e.step() == 4);
  }
  CHECK_FALSE(std::filesystem::exists(config_path));

  bad = good_answers();
  bad.provider = "acme";
  CHECK_THROWS_AS(validate_wizard_step(1, bad, base), WizardStepError);
  bad = good_answers();
  bad.teaching_style = "loud";
  CHECK_THROWS_AS(validate_wizard_step(2, bad, base), WizardStepError);
  bad = good_answers();
  bad.detail_level = "max";
  CHECK_THROWS_AS(validate_wizard_step(3, bad, base), WizardStepError);

  const auto first = run_setup_wizard(good_answers(), config_path, base);
  CHECK_FALSE(first.loaded_existing);
  CHECK(first.config.student_id == "amy-chen");
  CHECK(first.config.prompt.teaching_style == "gentle");
  CHECK(first.profile.contextual.grade == 3);
  CHECK(first.profile.contextual.subject_focus == std::vector<std::string>{"math", "science"});
  CHECK(first.profile.contextual.learning_goal == "add fractions");
  CHECK(std::filesystem::exists(config_path));

  auto store = open_store(base.store_path);
  const auto mem = store->list_memories("amy-chen", MemoryCategory::student_profile);
  REQUIRE(mem.size() == 1);
  CHECK(mem.front().content.find("Amy Chen") != std::string::npos);

  auto other = good_answers();
  other.grade = 7;
  const auto second = run_setup_wizard(other, config_path, base);
  CHECK(second.loaded_existing);
  CHECK(second.profile.contextual.grade == 3);
  CHECK(second.config.prompt.detail_level == "detailed");
}

TEST_CASE("student ids derived from names") {
  CHECK(student_id_from_name("Amy Chen") == "amy-chen");
  CHECK(student_id_from_name("  Li   Wei! ") == "li-wei");
  CHECK(student_id_from_name("小明") == "小明");
  CHECK(student_id_from_name("!!!").empty());
}
