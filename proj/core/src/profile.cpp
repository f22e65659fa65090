#include "tutor/profile.hpp"

#include <algorithm>
#include <cmath>

#include "tutor/errors.hpp"

namespace tutor {

using nlohmann::json;

Timestamp system_now() {
  return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

std::int64_t to_millis(Timestamp t) { return t.time_since_epoch().count(); }

Timestamp from_millis(std::int64_t ms) { return Timestamp{std::chrono::milliseconds{ms}}; }

namespace {

constexpr std::string_view kBloomNames[] = {"remember", "understand", "apply",
                                             "analyze",  "evaluate",   "create"};
constexpr std::string_view kMoodNames[] = {"confident", "curious", "frustrated",
                                           "anxious",   "engaged", "neutral"};
constexpr std::string_view kStrategyNames[] = {"unset", "guided", "exploratory"};

template <typename Enum, std::size_t N>
std::optional<Enum> parse_enum(std::string_view text, const std::string_view (&names)[N]) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == text) return static_cast<Enum>(i);
  }
  return std::nullopt;
}

template <typename T>
T read_enum(const json& value, std::optional<T> (*parse)(std::string_view), const char* field) {
  const auto parsed = parse(value.get<std::string>());
  if (!parsed) {
    throw PreconditionError(std::string("unknown value for ") + field + ": " + value.dump());
  }
  return *parsed;
}

}  // namespace

std::string_view to_string(BloomLevel level) { return kBloomNames[ordinal(level) - 1]; }

std::optional<BloomLevel> parse_bloom_level(std::string_view text) {
  for (auto level : kAllBloomLevels) {
    if (to_string(level) == text) return level;
  }
  return std::nullopt;
}

std::string_view to_string(Mood mood) { return kMoodNames[static_cast<std::size_t>(mood)]; }

std::optional<Mood> parse_mood(std::string_view text) { return parse_enum<Mood>(text, kMoodNames); }

std::string_view to_string(StrategyPreference pref) {
  return kStrategyNames[static_cast<std::size_t>(pref)];
}

std::optional<StrategyPreference> parse_strategy_preference(std::string_view text) {
  return parse_enum<StrategyPreference>(text, kStrategyNames);
}

UnitTrait::UnitTrait(double value) {
  if (std::isnan(value)) throw PreconditionError("unit trait value is NaN");
  value_ = std::clamp(value, 0.0, 1.0);
}

UnitTrait UnitTrait::adjusted(double delta) const { return UnitTrait(value_ + delta); }

UnitTrait adjust_trait(UnitTrait trait, double delta) { return trait.adjusted(delta); }

LearnerProfile default_profile(std::string student_id, int grade, std::vector<std::string> subjects,
                               std::string goal, Timestamp now) {
  if (grade < kMinGrade || grade > kMaxGrade) {
    throw PreconditionError("grade must be within " + std::to_string(kMinGrade) + "-" +
                            std::to_string(kMaxGrade) + ", got " + std::to_string(grade));
  }
  LearnerProfile p;
  p.student_id = std::move(student_id);
  p.contextual.grade = grade;
  p.contextual.subject_focus = std::move(subjects);
  p.contextual.learning_goal = std::move(goal);
  p.updated_at = now;
  return p;
}

void validate(const LearnerProfile& profile) {
  if (profile.student_id.empty()) throw PreconditionError("profile has an empty student_id");
  const auto grade = profile.contextual.grade;
  if (grade < kMinGrade || grade > kMaxGrade) {
    throw PreconditionError("grade out of range: " + std::to_string(grade));
  }
  for (const auto& topic : profile.cognitive.weak_topics) {
    if (!profile.cognitive.knowledge_tracing.contains(topic)) {
      throw PreconditionError("weak topic without knowledge tracing entry: " + topic);
    }
  }
  if (profile.behavioral.question_frequency < 0.0) {
    throw PreconditionError("negative question frequency");
  }
}

BloomLevel max_bloom(const std::set<BloomLevel>& levels) {
  if (levels.empty()) throw PreconditionError("max_bloom of an empty set");
  return *levels.rbegin();
}

// --- serialization ---------------------------------------------------------------------

void to_json(json& j, const CognitiveDim& d) {
  j = d.extra.is_object() ? d.extra : json::object();
  j["bloom_level"] = to_string(d.bloom_level);
  j["knowledge_state"] = d.knowledge_state;
  j["weak_topics"] = d.weak_topics;
  json kt = json::object();
  for (const auto& [topic, trait] : d.knowledge_tracing) kt[topic] = trait.value();
  j["knowledge_tracing"] = std::move(kt);
}

void from_json(const json& j, CognitiveDim& d) {
  d = CognitiveDim{};
  for (const auto& [key, value] : j.items()) {
    if (key == "bloom_level") {
      d.bloom_level = read_enum<BloomLevel>(value, parse_bloom_level, "bloom_level");
    } else if (key == "knowledge_state") {
      d.knowledge_state = value.get<std::map<std::string, std::string>>();
    } else if (key == "weak_topics") {
      d.weak_topics = value.get<std::set<std::string>>();
    } else if (key == "knowledge_tracing") {
      for (const auto& [topic, score] : value.items()) {
        d.knowledge_tracing[topic] = UnitTrait(score.get<double>());
      }
    } else {
      d.extra[key] = value;
    }
  }
  for (const auto& topic : d.weak_topics) {
    d.knowledge_tracing.try_emplace(topic, UnitTrait(kInitialTraitValue));
  }
}

void to_json(json& j, const BehavioralDim& d) {
  j = d.extra.is_object() ? d.extra : json::object();
  j["session_count"] = d.session_count;
  j["question_frequency"] = d.question_frequency;
  j["question_total"] = d.question_total;
  j["tool_usage"] = d.tool_usage;
}

void from_json(const json& j, BehavioralDim& d) {
  d = BehavioralDim{};
  for (const auto& [key, value] : j.items()) {
    if (key == "session_count") {
      d.session_count = value.get<std::uint64_t>();
    } else if (key == "question_frequency") {
      d.question_frequency = value.get<double>();
    } else if (key == "question_total") {
      d.question_total = value.get<std::uint64_t>();
    } else if (key == "tool_usage") {
      d.tool_usage = value.get<std::map<std::string, std::uint64_t>>();
    } else {
      d.extra[key] = value;
    }
  }
}

void to_json(json& j, const EmotionalDim& d) {
  j = d.extra.is_object() ? d.extra : json::object();
  j["current_mood"] = to_string(d.current_mood);
  j["self_efficacy"] = d.self_efficacy.value();
  j["motivation"] = d.motivation.value();
  j["frustration_count"] = d.frustration_count;
}

void from_json(const json& j, EmotionalDim& d) {
  d = EmotionalDim{};
  for (const auto& [key, value] : j.items()) {
    if (key == "current_mood") {
      d.current_mood = read_enum<Mood>(value, parse_mood, "current_mood");
    } else if (key == "self_efficacy") {
      d.self_efficacy = UnitTrait(value.get<double>());
    } else if (key == "motivation") {
      d.motivation = UnitTrait(value.get<double>());
    } else if (key == "frustration_count") {
      d.frustration_count = value.get<std::uint64_t>();
    } else {
      d.extra[key] = value;
    }
  }
}

void to_json(json& j, const MetacognitiveDim& d) {
  j = d.extra.is_object() ? d.extra : json::object();
  j["self_regulation"] = d.self_regulation.value();
  j["preferred_strategy"] = to_string(d.preferred_strategy);
  j["reflection_ability"] = d.reflection_ability.value();
}

void from_json(const json& j, MetacognitiveDim& d) {
  d = MetacognitiveDim{};
  for (const auto& [key, value] : j.items()) {
    if (key == "self_regulation") {
      d.self_regulation = UnitTrait(value.get<double>());
    } else if (key == "preferred_strategy") {
      d.preferred_strategy =
          read_enum<StrategyPreference>(value, parse_strategy_preference, "preferred_strategy");
    } else if (key == "reflection_ability") {
      d.reflection_ability = UnitTrait(value.get<double>());
    } else {
      d.extra[key] = value;
    }
  }
}

void to_json(json& j, const ContextualDim& d) {
  j = d.extra.is_object() ? d.extra : json::object();
  j["grade"] = d.grade;
  j["subject_focus"] = d.subject_focus;
  j["learning_goal"] = d.learning_goal;
}

void from_json(const json& j, ContextualDim& d) {
  d = ContextualDim{};
  for (const auto& [key, value] : j.items()) {
    if (key == "grade") {
      d.grade = value.get<int>();
    } else if (key == "subject_focus") {
      d.subject_focus = value.get<std::vector<std::string>>();
    } else if (key == "learning_goal") {
      d.learning_goal = value.get<std::string>();
    } else {
      d.extra[key] = value;
    }
  }
}

void to_json(json& j, const LearnerProfile& p) {
  j = json{{"student_id", p.student_id},
           {"cognitive", p.cognitive},
           {"behavioral", p.behavioral},
           {"emotional", p.emotional},
           {"metacognitive", p.metacognitive},
           {"contextual", p.contextual},
           {"updated_at", to_millis(p.updated_at)}};
}

void from_json(const json& j, LearnerProfile& p) {
  p = LearnerProfile{};
  p.student_id = j.at("student_id").get<std::string>();
  if (auto it = j.find("cognitive"); it != j.end()) p.cognitive = it->get<CognitiveDim>();
  if (auto it = j.find("behavioral"); it != j.end()) p.behavioral = it->get<BehavioralDim>();
  if (auto it = j.find("emotional"); it != j.end()) p.emotional = it->get<EmotionalDim>();
  if (auto it = j.find("metacognitive"); it != j.end()) {
    p.metacognitive = it->get<MetacognitiveDim>();
  }
  if (auto it = j.find("contextual"); it != j.end()) p.contextual = it->get<ContextualDim>();
  if (auto it = j.find("updated_at"); it != j.end()) p.updated_at = from_millis(it->get<std::int64_t>());
}

}  // namespace tutor
