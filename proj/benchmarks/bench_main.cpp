#include <benchmark/benchmark.h>

#include <memory>
#include <string>
#include <vector>

#include "tutor/calculator.hpp"
#include "tutor/mock_provider.hpp"
#include "tutor/orchestrator.hpp"
#include "tutor/prompt.hpp"
#include "tutor/sensory.hpp"
#include "tutor/store.hpp"
#include "tutor/strategy.hpp"
#include "tutor/updater.hpp"

using namespace tutor;

namespace {

const std::vector<std::string> kMessages = {
    "I keep getting fraction addition wrong...",
    "The ones with different denominators, like 1/3 + 1/4.",
    "Whoa it floats with salt! Why?",
    "I'm so nervous about tomorrow's test, I always mess up comparing sizes.",
};

LearnerProfile busy_profile() {
  auto p = default_profile("bench", 4, {"math", "science"}, "fractions");
  p.emotional.self_efficacy = UnitTrait(0.25);
  for (const char* t : {"fractions", "decimals", "density", "ratios"}) {
    p.cognitive.weak_topics.insert(t);
    p.cognitive.knowledge_tracing[t] = UnitTrait(0.4);
  }
  return p;
}

void BM_Route(benchmark::State& state) {
  const auto& dict = default_dictionary();
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(route(kMessages[i++ % kMessages.size()], dict));
}
BENCHMARK(BM_Route);

void BM_ExtractSignals(benchmark::State& state) {
  const auto& dict = default_dictionary();
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(extract_signals(kMessages[i++ % kMessages.size()], dict));
}
BENCHMARK(BM_ExtractSignals);

void BM_UpdateProfile(benchmark::State& state) {
  const auto& dict = default_dictionary();
  const auto p = busy_profile();
  const std::vector<std::string> msgs(kMessages.begin(), kMessages.begin() + state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(update_profile_from_interaction(p, msgs, dict));
}
BENCHMARK(BM_UpdateProfile)->Arg(1)->Arg(4);

void BM_GenerateStrategy(benchmark::State& state) {
  const StrategyEngine engine;
  const auto p = busy_profile();
  for (auto _ : state) benchmark::DoNotOptimize(engine.generate(p));
}
BENCHMARK(BM_GenerateStrategy);

void BM_ComposePrompt(benchmark::State& state) {
  const PromptAssembler assembler(default_templates(), PromptOptions{});
  const auto p = busy_profile();
  const auto s = generate_strategy(p);
  for (auto _ : state) benchmark::DoNotOptimize(assembler.compose(IntentCategory::math, p, s));
}
BENCHMARK(BM_ComposePrompt);

void BM_Calculator(benchmark::State& state) {
  const std::string expr = "((1/3 + 1/4) * 12 - 2 * 2 * 2) / (4 - 1.5) + 7 * (2 - 3) * -1";
  for (auto _ : state) benchmark::DoNotOptimize(eval_expression(expr));
}
BENCHMARK(BM_Calculator);

void BM_SqliteSaveLoad(benchmark::State& state) {
  SqliteStore store(":memory:");
  const auto p = busy_profile();
  for (auto _ : state) {
    store.save_profile(p);
    benchmark::DoNotOptimize(store.load_profile(p.student_id));
  }
}
BENCHMARK(BM_SqliteSaveLoad);

// Whole turn through the engine with the in-process mock provider.
void BM_HandleTurn(benchmark::State& state) {
  auto store = std::make_shared<InMemoryStore>();
  store->save_profile(busy_profile());
  EngineDependencies deps;
  deps.store = store;
  deps.transport = std::make_shared<MockTransport>(std::make_shared<MockResponder>());
  Engine engine(EngineConfig{}, deps);
  auto session = engine.open_session("bench");
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(engine.handle_turn(session, kMessages[i++ % kMessages.size()]));
    if (i % 64 == 0) {
      state.PauseTiming();
      engine.close_session(session);
      session = engine.open_session("bench");
      state.ResumeTiming();
    }
  }
}
BENCHMARK(BM_HandleTurn);

}  // namespace

BENCHMARK_MAIN();
