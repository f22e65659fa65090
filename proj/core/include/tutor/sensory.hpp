#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tutor/profile.hpp"

namespace tutor {

enum class IntentCategory { math, chinese, science, writing, reading, emotional, general };

// Also the tie-break order for routing.
inline constexpr IntentCategory kAllIntents[] = {
    IntentCategory::math,    IntentCategory::chinese,   IntentCategory::science,
    IntentCategory::writing, IntentCategory::reading,   IntentCategory::emotional,
    IntentCategory::general,
};

std::string_view to_string(IntentCategory category);
std::optional<IntentCategory> parse_intent(std::string_view text);

// Lowercases ASCII, folds typographic quotes to ASCII and collapses whitespace runs.
std::string normalize_text(std::string_view text);

// Locale-specific phrase lists driving routing and signal extraction. Every phrase is
// stored normalized. On disk, mapped fields are grouped by value (level -> phrases,
// mood -> phrases, ...) so that a duplicate mapping shows up as a validation error.
struct KeywordDictionary {
  std::string locale;
  std::map<std::string, BloomLevel> bloom_patterns;
  std::vector<std::string> error_markers;
  std::map<std::string, Mood> sentiment;
  std::vector<std::string> frustration_markers;
  std::vector<std::string> engagement_markers;
  std::vector<std::string> reflection_markers;
  std::map<std::string, StrategyPreference> strategy_markers;
  std::map<std::string, std::vector<std::string>> subject_keywords;  // topic -> phrases
  std::map<IntentCategory, std::vector<std::string>> intent_keywords;
  std::vector<std::string> question_markers;

  static KeywordDictionary from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

KeywordDictionary load_dictionary(const std::filesystem::path& path);
const KeywordDictionary& default_dictionary();

struct SignalSet {
  std::set<BloomLevel> bloom_hits;
  std::set<std::string> weak_topic_hits;
  std::map<Mood, unsigned> mood_hits;  // multiset: mood -> matched phrase count
  unsigned frustration_hits = 0;
  unsigned engagement_hits = 0;
  unsigned reflection_hits = 0;
  std::optional<StrategyPreference> strategy_hit;
  unsigned question_count = 0;

  bool empty() const;
  // Component-wise union/sum; `later`'s strategy hit wins when present.
  void merge(const SignalSet& later);

  friend bool operator==(const SignalSet&, const SignalSet&) = default;
};

// Highest multiset count; ties go to frustrated > anxious > confident > curious > engaged > neutral.
std::optional<Mood> dominant_mood(const std::map<Mood, unsigned>& mood_hits);

// Throws PreconditionError when the message is blank.
IntentCategory route(std::string_view message, const KeywordDictionary& dict);

SignalSet extract_signals(std::string_view message, const KeywordDictionary& dict);

}  // namespace tutor
