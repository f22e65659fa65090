#include "tutor/sensory.hpp"

#include <algorithm>
#include <array>
#include <fstream>

#include "embedded_data.hpp"
#include "tutor/errors.hpp"

namespace tutor {

using nlohmann::json;

namespace {

constexpr std::string_view kIntentNames[] = {"math",    "chinese",   "science", "writing",
                                             "reading", "emotional", "general"};

// Lower index wins a tie.
constexpr std::array<Mood, 6> kMoodPriority = {Mood::frustrated, Mood::anxious, Mood::confident,
                                               Mood::curious,    Mood::engaged, Mood::neutral};

bool contains(std::string_view haystack, std::string_view needle) {
  return haystack.find(needle) != std::string_view::npos;
}

bool any_of_phrases(std::string_view text, const std::vector<std::string>& phrases) {
  return std::any_of(phrases.begin(), phrases.end(),
                     [&](const std::string& p) { return contains(text, p); });
}

std::string checked_phrase(const std::string& raw, std::string_view field) {
  auto phrase = normalize_text(raw);
  if (phrase.empty()) {
    throw ConfigError("dictionary field '" + std::string(field) + "' contains an empty phrase");
  }
  return phrase;
}

std::vector<std::string> read_phrases(const json& doc, std::string_view field) {
  std::vector<std::string> out;
  auto it = doc.find(std::string(field));
  if (it == doc.end()) return out;
  for (const auto& raw : *it) out.push_back(checked_phrase(raw.get<std::string>(), field));
  return out;
}

// value -> [phrase...] on disk, phrase -> value in memory.
template <typename Value>
std::map<std::string, Value> read_inverted(const json& doc, std::string_view field,
                                           std::optional<Value> (*parse)(std::string_view)) {
  std::map<std::string, Value> out;
  auto it = doc.find(std::string(field));
  if (it == doc.end()) return out;
  for (const auto& [key, phrases] : it->items()) {
    auto value = parse(key);
    if (!value) throw ConfigError("dictionary field '" + std::string(field) + "' has unknown key " + key);
    for (const auto& raw : phrases) {
      auto phrase = checked_phrase(raw.template get<std::string>(), field);
      auto [pos, inserted] = out.emplace(phrase, *value);
      if (!inserted && pos->second != *value) {
        throw ConfigError("dictionary phrase '" + phrase + "' maps to two values in " +
                          std::string(field));
      }
    }
  }
  return out;
}

template <typename Value>
json write_inverted(const std::map<std::string, Value>& in) {
  json out = json::object();
  for (const auto& [phrase, value] : in) out[std::string(to_string(value))].push_back(phrase);
  return out;
}

}  // namespace

std::string_view to_string(IntentCategory category) {
  return kIntentNames[static_cast<std::size_t>(category)];
}

std::optional<IntentCategory> parse_intent(std::string_view text) {
  for (std::size_t i = 0; i < std::size(kIntentNames); ++i) {
    if (kIntentNames[i] == text) return static_cast<IntentCategory>(i);
  }
  return std::nullopt;
}

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    auto c = static_cast<unsigned char>(text[i]);
    // U+2018 / U+2019 single quotes -> '
    if (c == 0xE2 && i + 2 < text.size() && static_cast<unsigned char>(text[i + 1]) == 0x80 &&
        (static_cast<unsigned char>(text[i + 2]) == 0x98 ||
         static_cast<unsigned char>(text[i + 2]) == 0x99)) {
      c = '\'';
      i += 2;
    }
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
  }
  return out;
}

KeywordDictionary KeywordDictionary::from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("keyword dictionary must be a JSON object");
  KeywordDictionary d;
  d.locale = doc.value("locale", "en");
  d.bloom_patterns = read_inverted<BloomLevel>(doc, "bloom_patterns", parse_bloom_level);
  d.error_markers = read_phrases(doc, "error_markers");
  d.sentiment = read_inverted<Mood>(doc, "sentiment", parse_mood);
  d.frustration_markers = read_phrases(doc, "frustration_markers");
  d.engagement_markers = read_phrases(doc, "engagement_markers");
  d.reflection_markers = read_phrases(doc, "reflection_markers");
  d.strategy_markers =
      read_inverted<StrategyPreference>(doc, "strategy_markers", parse_strategy_preference);
  if (auto it = doc.find("subject_keywords"); it != doc.end()) {
    for (const auto& [topic, phrases] : it->items()) {
      auto& list = d.subject_keywords[topic];
      for (const auto& raw : phrases) list.push_back(checked_phrase(raw.get<std::string>(), "subject_keywords"));
    }
  }
  if (auto it = doc.find("intent_keywords"); it != doc.end()) {
    for (const auto& [name, phrases] : it->items()) {
      auto category = parse_intent(name);
      if (!category) throw ConfigError("unknown intent category in dictionary: " + name);
      auto& list = d.intent_keywords[*category];
      for (const auto& raw : phrases) list.push_back(checked_phrase(raw.get<std::string>(), "intent_keywords"));
    }
  }
  d.question_markers = read_phrases(doc, "question_markers");
  return d;
}

json KeywordDictionary::to_json() const {
  json doc;
  doc["locale"] = locale;
  doc["bloom_patterns"] = write_inverted(bloom_patterns);
  doc["error_markers"] = error_markers;
  doc["sentiment"] = write_inverted(sentiment);
  doc["frustration_markers"] = frustration_markers;
  doc["engagement_markers"] = engagement_markers;
  doc["reflection_markers"] = reflection_markers;
  doc["strategy_markers"] = write_inverted(strategy_markers);
  doc["subject_keywords"] = subject_keywords;
  json intents = json::object();
  for (const auto& [category, phrases] : intent_keywords) {
    intents[std::string(tutor::to_string(category))] = phrases;
  }
  doc["intent_keywords"] = std::move(intents);
  doc["question_markers"] = question_markers;
  return doc;
}

KeywordDictionary load_dictionary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open keyword dictionary " + path.string());
  try {
    return KeywordDictionary::from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw ConfigError("malformed keyword dictionary " + path.string() + ": " + e.what());
  }
}

const KeywordDictionary& default_dictionary() {
  static const KeywordDictionary dict =
      KeywordDictionary::from_json(json::parse(detail::embedded_file("dictionary/en.json")));
  return dict;
}

bool SignalSet::empty() const { return *this == SignalSet{}; }

void SignalSet::merge(const SignalSet& later) {
  bloom_hits.insert(later.bloom_hits.begin(), later.bloom_hits.end());
  weak_topic_hits.insert(later.weak_topic_hits.begin(), later.weak_topic_hits.end());
  for (const auto& [mood, count] : later.mood_hits) mood_hits[mood] += count;
  frustration_hits += later.frustration_hits;
  engagement_hits += later.engagement_hits;
  reflection_hits += later.reflection_hits;
  if (later.strategy_hit) strategy_hit = later.strategy_hit;
  question_count += later.question_count;
}

std::optional<Mood> dominant_mood(const std::map<Mood, unsigned>& mood_hits) {
  std::optional<Mood> best;
  unsigned best_count = 0;
  for (auto mood : kMoodPriority) {
    auto it = mood_hits.find(mood);
    if (it != mood_hits.end() && it->second > best_count) {
      best = mood;
      best_count = it->second;
    }
  }
  return best;
}

IntentCategory route(std::string_view message, const KeywordDictionary& dict) {
  const auto text = normalize_text(message);
  if (text.empty()) throw PreconditionError("cannot route an empty message");

  auto best = IntentCategory::general;
  std::size_t best_hits = 0;
  for (auto category : kAllIntents) {
    auto it = dict.intent_keywords.find(category);
    if (it == dict.intent_keywords.end()) continue;
    const auto hits = static_cast<std::size_t>(
        std::count_if(it->second.begin(), it->second.end(),
                      [&](const std::string& p) { return contains(text, p); }));
    if (hits > best_hits) {
      best = category;
      best_hits = hits;
    }
  }
  return best;
}

SignalSet extract_signals(std::string_view message, const KeywordDictionary& dict) {
  SignalSet s;
  const auto text = normalize_text(message);
  if (text.empty()) return s;

  for (const auto& [phrase, level] : dict.bloom_patterns) {
    if (contains(text, phrase)) s.bloom_hits.insert(level);
  }
  if (any_of_phrases(text, dict.error_markers)) {
    for (const auto& [topic, phrases] : dict.subject_keywords) {
      if (any_of_phrases(text, phrases)) s.weak_topic_hits.insert(topic);
    }
  }
  for (const auto& [phrase, mood] : dict.sentiment) {
    if (contains(text, phrase)) ++s.mood_hits[mood];
  }
  // One hit per message and category: a message is frustrated or it is not.
  s.frustration_hits = any_of_phrases(text, dict.frustration_markers) ? 1 : 0;
  s.engagement_hits = any_of_phrases(text, dict.engagement_markers) ? 1 : 0;
  s.reflection_hits = any_of_phrases(text, dict.reflection_markers) ? 1 : 0;

  // Latest mention in the message decides; a longer phrase wins at the same position.
  std::size_t best_pos = 0;
  std::size_t best_len = 0;
  for (const auto& [phrase, pref] : dict.strategy_markers) {
    const auto pos = text.rfind(phrase);
    if (pos == std::string::npos) continue;
    if (!s.strategy_hit || pos > best_pos || (pos == best_pos && phrase.size() > best_len)) {
      s.strategy_hit = pref;
      best_pos = pos;
      best_len = phrase.size();
    }
  }

  if (contains(text, "?") || any_of_phrases(text, dict.question_markers)) s.question_count = 1;
  return s;
}

}  // namespace tutor
