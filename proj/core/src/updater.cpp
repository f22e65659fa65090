#include "tutor/updater.hpp"

#include <algorithm>
#include <string_view>

#include "tutor/errors.hpp"

namespace tutor {

using nlohmann::json;

void UpdatePolicy::validate() const {
  const std::pair<const char*, double> steps[] = {{"efficacy_step", efficacy_step},
                                                  {"motivation_step", motivation_step},
                                                  {"reflection_step", reflection_step},
                                                  {"kt_step", kt_step}};
  for (const auto& [name, step] : steps) {
    if (!(step > 0.0 && step <= 0.5)) {
      throw ConfigError(std::string("update policy ") + name + " must lie in (0, 0.5], got " +
                        std::to_string(step));
    }
  }
}

void to_json(json& j, const UpdatePolicy& p) {
  j = json{{"efficacy_step", p.efficacy_step},
           {"motivation_step", p.motivation_step},
           {"reflection_step", p.reflection_step},
           {"kt_step", p.kt_step}};
}

void from_json(const json& j, UpdatePolicy& p) {
  const UpdatePolicy defaults;
  p.efficacy_step = j.value("efficacy_step", defaults.efficacy_step);
  p.motivation_step = j.value("motivation_step", defaults.motivation_step);
  p.reflection_step = j.value("reflection_step", defaults.reflection_step);
  p.kt_step = j.value("kt_step", defaults.kt_step);
  p.validate();
}

void ProfileDelta::append(const ProfileDelta& other) {
  entries.insert(entries.end(), other.entries.begin(), other.entries.end());
}

void to_json(json& j, const DeltaEntry& e) {
  j = json{{"path", e.path}, {"old", e.old_value}, {"new", e.new_value}, {"trigger", e.trigger}};
}

void from_json(const json& j, DeltaEntry& e) {
  e.path = j.at("path").get<std::string>();
  e.old_value = j.value("old", json());
  e.new_value = j.value("new", json());
  e.trigger = j.value("trigger", "");
}

void to_json(json& j, const ProfileDelta& d) { j = d.entries; }

void from_json(const json& j, ProfileDelta& d) { d.entries = j.get<std::vector<DeltaEntry>>(); }

LearnerProfile apply_delta(const LearnerProfile& before, const ProfileDelta& delta) {
  json doc = before;
  for (const auto& entry : delta.entries) {
    const json::json_pointer ptr(entry.path);
    if (entry.new_value.is_null()) {
      doc.at(ptr.parent_pointer()).erase(ptr.back());
    } else {
      doc[ptr] = entry.new_value;
    }
  }
  return doc.get<LearnerProfile>();
}

namespace {

// Collects field changes; no-op writes are dropped.
class DeltaRecorder {
public:
  void trait(UnitTrait& field, std::string path, double delta, std::string trigger) {
    const auto before = field;
    field = adjust_trait(field, delta);
    if (field != before) {
      record(std::move(path), before.value(), field.value(), std::move(trigger));
    }
  }

  void record(std::string path, json old_value, json new_value, std::string trigger) {
    if (old_value == new_value) return;
    delta_.entries.push_back(
        {std::move(path), std::move(old_value), std::move(new_value), std::move(trigger)});
  }

  ProfileDelta take() { return std::move(delta_); }

private:
  ProfileDelta delta_;
};

std::string kt_path(const std::string& topic) {
  return (json::json_pointer("/cognitive/knowledge_tracing") / topic).to_string();
}

std::string in_message(std::string_view what, std::size_t index) {
  return std::string(what) + " (message " + std::to_string(index + 1) + ")";
}

}  // namespace

ProfileUpdate update_profile_from_signals(const LearnerProfile& profile,
                                          std::span<const SignalSet> per_message,
                                          const UpdatePolicy& policy) {
  LearnerProfile next = profile;
  DeltaRecorder rec;

  // Cognitive
  SignalSet merged;
  for (const auto& s : per_message) merged.merge(s);
  if (!merged.bloom_hits.empty()) {
    const auto detected = max_bloom(merged.bloom_hits);
    if (detected > next.cognitive.bloom_level) {
      rec.record("/cognitive/bloom_level", to_string(next.cognitive.bloom_level),
                 to_string(detected), "bloom evidence: " + std::string(to_string(detected)));
      next.cognitive.bloom_level = detected;
    }
  }
  for (std::size_t i = 0; i < per_message.size(); ++i) {
    for (const auto& topic : per_message[i].weak_topic_hits) {
      auto& cog = next.cognitive;
      if (!cog.weak_topics.contains(topic)) {
        const json before = cog.weak_topics;
        cog.weak_topics.insert(topic);
        rec.record("/cognitive/weak_topics", before, cog.weak_topics,
                   in_message("error marker with topic '" + topic + "'", i));
      }
      auto it = cog.knowledge_tracing.find(topic);
      const json before = it == cog.knowledge_tracing.end() ? json() : json(it->second.value());
      const auto base = it == cog.knowledge_tracing.end() ? UnitTrait(kInitialTraitValue) : it->second;
      const auto after = adjust_trait(base, -policy.kt_step);
      cog.knowledge_tracing[topic] = after;
      rec.record(kt_path(topic), before, after.value(),
                 in_message("error marker with topic '" + topic + "'", i));
    }
  }

  // Emotional
  if (auto mood = dominant_mood(merged.mood_hits)) {
    rec.record("/emotional/current_mood", to_string(next.emotional.current_mood), to_string(*mood),
               "dominant sentiment");
    next.emotional.current_mood = *mood;
  }
  auto& emo = next.emotional;
  for (std::size_t i = 0; i < per_message.size(); ++i) {
    const auto& s = per_message[i];
    for (unsigned k = 0; k < s.frustration_hits; ++k) {
      const auto why = in_message("frustration marker", i);
      rec.trait(emo.self_efficacy, "/emotional/self_efficacy", -policy.efficacy_step, why);
      rec.trait(emo.motivation, "/emotional/motivation", -policy.motivation_step, why);
    }
    for (unsigned k = 0; k < s.engagement_hits; ++k) {
      const auto why = in_message("engagement marker", i);
      rec.trait(emo.self_efficacy, "/emotional/self_efficacy", policy.efficacy_step, why);
      rec.trait(emo.motivation, "/emotional/motivation", policy.motivation_step, why);
    }
  }
  if (merged.frustration_hits > 0) {
    const auto before = emo.frustration_count;
    emo.frustration_count += merged.frustration_hits;
    rec.record("/emotional/frustration_count", before, emo.frustration_count, "frustration markers");
  }

  // Metacognitive
  auto& meta = next.metacognitive;
  for (std::size_t i = 0; i < per_message.size(); ++i) {
    for (unsigned k = 0; k < per_message[i].reflection_hits; ++k) {
      rec.trait(meta.reflection_ability, "/metacognitive/reflection_ability", policy.reflection_step,
                in_message("reflection marker", i));
    }
  }
  if (merged.strategy_hit) {
    rec.record("/metacognitive/preferred_strategy", to_string(meta.preferred_strategy),
               to_string(*merged.strategy_hit), "strategy-choice marker");
    meta.preferred_strategy = *merged.strategy_hit;
  }

  // Behavioral
  if (merged.question_count > 0) {
    auto& beh = next.behavioral;
    const auto total_before = beh.question_total;
    const auto freq_before = beh.question_frequency;
    beh.question_total += merged.question_count;
    beh.question_frequency = static_cast<double>(beh.question_total) /
                             static_cast<double>(std::max<std::uint64_t>(beh.session_count, 1));
    rec.record("/behavioral/question_total", total_before, beh.question_total, "questions asked");
    rec.record("/behavioral/question_frequency", freq_before, beh.question_frequency,
               "questions asked");
  }

  return {std::move(next), rec.take()};
}

ProfileUpdate update_profile_from_interaction(const LearnerProfile& profile,
                                              std::span<const std::string> messages,
                                              const KeywordDictionary& dict,
                                              const UpdatePolicy& policy) {
  std::vector<SignalSet> signals;
  signals.reserve(messages.size());
  for (const auto& m : messages) signals.push_back(extract_signals(m, dict));
  return update_profile_from_signals(profile, signals, policy);
}

LearnerProfile begin_session(LearnerProfile profile) {
  auto& beh = profile.behavioral;
  ++beh.session_count;
  beh.question_frequency =
      static_cast<double>(beh.question_total) / static_cast<double>(beh.session_count);
  return profile;
}

ProfileUpdate record_tool_use(const LearnerProfile& profile, const std::string& tool_name) {
  LearnerProfile next = profile;
  DeltaRecorder rec;
  auto& count = next.behavioral.tool_usage[tool_name];
  const json before = count == 0 ? json() : json(count);
  ++count;
  rec.record((json::json_pointer("/behavioral/tool_usage") / tool_name).to_string(), before, count,
             "tool call: " + tool_name);
  return {std::move(next), rec.take()};
}

}  // namespace tutor
