#include "tutor/strategy.hpp"

#include <fstream>

#include "embedded_data.hpp"
#include "tutor/errors.hpp"

namespace tutor {

using nlohmann::json;

void to_json(json& j, const StrategyBlock& b) {
  j = json{{"fired", b.fired}, {"rendered", b.rendered}};
}

RuleTemplates RuleTemplates::from_json(const json& doc) {
  RuleTemplates t;
  t.header = doc.at("header").get<std::string>();
  t.rule_text = doc.at("rules").get<std::map<std::string, std::string>>();
  if (t.header.empty()) throw ConfigError("rule templates: empty header");
  return t;
}

RuleTemplates load_rule_templates(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open rule templates " + path.string());
  try {
    return RuleTemplates::from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw ConfigError("malformed rule templates " + path.string() + ": " + e.what());
  }
}

const RuleTemplates& default_rule_templates() {
  static const RuleTemplates templates = RuleTemplates::from_json(
      json::parse(detail::embedded_file("templates/strategy_rules.json")));
  return templates;
}

namespace {

std::vector<StrategyRule> builtin_rules() {
  return {
      {"R1", "low_efficacy_or_frustrated",
       [](const LearnerProfile& p) {
         return p.emotional.self_efficacy.value() < kLowEfficacyThreshold ||
                p.emotional.frustration_count > kFrustrationLimit;
       },
       {}},
      {"R2", "high_motivation",
       [](const LearnerProfile& p) {
         return p.emotional.motivation.value() > kHighMotivationThreshold;
       },
       {}},
      {"R3", "many_weak_topics",
       [](const LearnerProfile& p) { return p.cognitive.weak_topics.size() > kWeakTopicLimit; },
       {}},
      {"R4", "bloom_remember",
       [](const LearnerProfile& p) { return p.cognitive.bloom_level == BloomLevel::remember; },
       {}},
      {"R5", "bloom_apply",
       [](const LearnerProfile& p) { return p.cognitive.bloom_level == BloomLevel::apply; }, {}},
      {"R6", "prefers_guided",
       [](const LearnerProfile& p) {
         return p.metacognitive.preferred_strategy == StrategyPreference::guided;
       },
       {}},
      {"R7", "prefers_exploratory",
       [](const LearnerProfile& p) {
         return p.metacognitive.preferred_strategy == StrategyPreference::exploratory;
       },
       {}},
  };
}

}  // namespace

StrategyEngine::StrategyEngine() : StrategyEngine(default_rule_templates()) {}

StrategyEngine::StrategyEngine(RuleTemplates templates)
    : header_(std::move(templates.header)), rules_(builtin_rules()) {
  for (auto& rule : rules_) {
    auto it = templates.rule_text.find(rule.id);
    if (it == templates.rule_text.end() || it->second.empty()) {
      throw ConfigError("rule templates: missing instruction text for " + rule.id);
    }
    rule.instruction_text = it->second;
  }
}

StrategyBlock StrategyEngine::generate(const LearnerProfile& profile) const {
  StrategyBlock block;
  for (const auto& rule : rules_) {
    if (!rule.predicate(profile)) continue;
    block.fired.push_back(rule.id);
    if (block.rendered.empty()) block.rendered = header_ + '\n';
    block.rendered += rule.instruction_text;
    block.rendered += '\n';
  }
  return block;
}

StrategyBlock generate_strategy(const LearnerProfile& profile) {
  static const StrategyEngine engine;
  return engine.generate(profile);
}

}  // namespace tutor
