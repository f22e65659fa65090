#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace tutor {

using Timestamp = std::chrono::time_point<std::chrono::system_clock, std::chrono::milliseconds>;
using Clock = std::function<Timestamp()>;

Timestamp system_now();
std::int64_t to_millis(Timestamp t);
Timestamp from_millis(std::int64_t ms);

enum class BloomLevel : int {
  remember = 1,
  understand = 2,
  apply = 3,
  analyze = 4,
  evaluate = 5,
  create = 6,
};

inline constexpr BloomLevel kAllBloomLevels[] = {
    BloomLevel::remember, BloomLevel::understand, BloomLevel::apply,
    BloomLevel::analyze,  BloomLevel::evaluate,   BloomLevel::create,
};

constexpr int ordinal(BloomLevel level) { return static_cast<int>(level); }
std::string_view to_string(BloomLevel level);
std::optional<BloomLevel> parse_bloom_level(std::string_view text);

enum class Mood { confident, curious, frustrated, anxious, engaged, neutral };

inline constexpr Mood kAllMoods[] = {Mood::confident, Mood::curious, Mood::frustrated,
                                     Mood::anxious,   Mood::engaged, Mood::neutral};

std::string_view to_string(Mood mood);
std::optional<Mood> parse_mood(std::string_view text);

enum class StrategyPreference { unset, guided, exploratory };

std::string_view to_string(StrategyPreference pref);
std::optional<StrategyPreference> parse_strategy_preference(std::string_view text);

// A real number held in [0,1]. Every construction and adjustment saturates at the bounds.
class UnitTrait {
public:
  constexpr UnitTrait() = default;
  explicit UnitTrait(double value);

  double value() const noexcept { return value_; }
  UnitTrait adjusted(double delta) const;

  friend bool operator==(UnitTrait, UnitTrait) = default;

private:
  double value_ = 0.0;
};

// result = min(1, max(0, trait + delta))
UnitTrait adjust_trait(UnitTrait trait, double delta);

// Each dimension keeps the JSON members it does not recognise in `extra` so that rows
// written by a newer build survive a load/save cycle through this one.
struct CognitiveDim {
  BloomLevel bloom_level = BloomLevel::remember;
  std::map<std::string, std::string> knowledge_state;
  std::set<std::string> weak_topics;
  std::map<std::string, UnitTrait> knowledge_tracing;
  nlohmann::json extra = nlohmann::json::object();

  friend bool operator==(const CognitiveDim&, const CognitiveDim&) = default;
};

struct BehavioralDim {
  std::uint64_t session_count = 0;
  // Questions per session, exact mean over all sessions: question_total / session_count.
  double question_frequency = 0.0;
  std::uint64_t question_total = 0;
  std::map<std::string, std::uint64_t> tool_usage;
  nlohmann::json extra = nlohmann::json::object();

  friend bool operator==(const BehavioralDim&, const BehavioralDim&) = default;
};

struct EmotionalDim {
  Mood current_mood = Mood::neutral;
  UnitTrait self_efficacy{0.5};
  UnitTrait motivation{0.5};
  std::uint64_t frustration_count = 0;
  nlohmann::json extra = nlohmann::json::object();

  friend bool operator==(const EmotionalDim&, const EmotionalDim&) = default;
};

struct MetacognitiveDim {
  UnitTrait self_regulation{0.5};
  StrategyPreference preferred_strategy = StrategyPreference::unset;
  UnitTrait reflection_ability{0.5};
  nlohmann::json extra = nlohmann::json::object();

  friend bool operator==(const MetacognitiveDim&, const MetacognitiveDim&) = default;
};

struct ContextualDim {
  int grade = 1;
  std::vector<std::string> subject_focus;
  std::string learning_goal;
  nlohmann::json extra = nlohmann::json::object();

  friend bool operator==(const ContextualDim&, const ContextualDim&) = default;
};

struct LearnerProfile {
  std::string student_id;
  CognitiveDim cognitive;
  BehavioralDim behavioral;
  EmotionalDim emotional;
  MetacognitiveDim metacognitive;
  ContextualDim contextual;
  Timestamp updated_at{};

  friend bool operator==(const LearnerProfile&, const LearnerProfile&) = default;
};

inline constexpr int kMinGrade = 1;
inline constexpr int kMaxGrade = 12;
inline constexpr double kInitialTraitValue = 0.5;

LearnerProfile default_profile(std::string student_id, int grade, std::vector<std::string> subjects,
                               std::string goal, Timestamp now = {});

// Throws PreconditionError naming the first broken invariant.
void validate(const LearnerProfile& profile);

BloomLevel max_bloom(const std::set<BloomLevel>& levels);

void to_json(nlohmann::json& j, const CognitiveDim& d);
void from_json(const nlohmann::json& j, CognitiveDim& d);
void to_json(nlohmann::json& j, const BehavioralDim& d);
void from_json(const nlohmann::json& j, BehavioralDim& d);
void to_json(nlohmann::json& j, const EmotionalDim& d);
void from_json(const nlohmann::json& j, EmotionalDim& d);
void to_json(nlohmann::json& j, const MetacognitiveDim& d);
void from_json(const nlohmann::json& j, MetacognitiveDim& d);
void to_json(nlohmann::json& j, const ContextualDim& d);
void from_json(const nlohmann::json& j, ContextualDim& d);
void to_json(nlohmann::json& j, const LearnerProfile& p);
void from_json(const nlohmann::json& j, LearnerProfile& p);

}  // namespace tutor
