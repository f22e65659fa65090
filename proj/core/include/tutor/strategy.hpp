#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tutor/profile.hpp"

namespace tutor {

inline constexpr double kLowEfficacyThreshold = 0.3;   // fires strictly below
inline constexpr std::uint64_t kFrustrationLimit = 5;  // fires strictly above
inline constexpr double kHighMotivationThreshold = 0.8;
inline constexpr std::size_t kWeakTopicLimit = 3;

struct StrategyRule {
  std::string id;  // "R1".."R7"
  std::string name;
  std::function<bool(const LearnerProfile&)> predicate;
  std::string instruction_text;
};

struct StrategyBlock {
  std::vector<std::string> fired;
  std::string rendered;  // empty when nothing fired

  bool empty() const noexcept { return fired.empty(); }

  friend bool operator==(const StrategyBlock&, const StrategyBlock&) = default;
};

void to_json(nlohmann::json& j, const StrategyBlock& b);

// Header line plus one instruction text per rule id, editable by educators.
struct RuleTemplates {
  std::string header;
  std::map<std::string, std::string> rule_text;

  static RuleTemplates from_json(const nlohmann::json& doc);
};

RuleTemplates load_rule_templates(const std::filesystem::path& path);
const RuleTemplates& default_rule_templates();

class StrategyEngine {
public:
  StrategyEngine();
  explicit StrategyEngine(RuleTemplates templates);

  // Evaluates every rule in fixed R1..R7 order and renders the fired ones.
  StrategyBlock generate(const LearnerProfile& profile) const;

  const std::vector<StrategyRule>& rules() const noexcept { return rules_; }
  const std::string& header() const noexcept { return header_; }

private:
  std::string header_;
  std::vector<StrategyRule> rules_;
};

StrategyBlock generate_strategy(const LearnerProfile& profile);

}  // namespace tutor
