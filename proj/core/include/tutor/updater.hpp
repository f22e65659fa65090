#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tutor/profile.hpp"
#include "tutor/sensory.hpp"

namespace tutor {

struct UpdatePolicy {
  double efficacy_step = 0.1;
  double motivation_step = 0.1;
  double reflection_step = 0.05;
  double kt_step = 0.1;

  // Every step must lie in (0, 0.5].
  void validate() const;

  friend bool operator==(const UpdatePolicy&, const UpdatePolicy&) = default;
};

void to_json(nlohmann::json& j, const UpdatePolicy& p);
void from_json(const nlohmann::json& j, UpdatePolicy& p);

// One field change. `path` is a JSON pointer into the serialized profile; a null
// `new_value` means the member was removed, a null `old_value` that it was created.
struct DeltaEntry {
  std::string path;
  nlohmann::json old_value;
  nlohmann::json new_value;
  std::string trigger;

  friend bool operator==(const DeltaEntry&, const DeltaEntry&) = default;
};

struct ProfileDelta {
  std::vector<DeltaEntry> entries;

  bool empty() const noexcept { return entries.empty(); }
  void append(const ProfileDelta& other);

  friend bool operator==(const ProfileDelta&, const ProfileDelta&) = default;
};

void to_json(nlohmann::json& j, const DeltaEntry& e);
void from_json(const nlohmann::json& j, DeltaEntry& e);
void to_json(nlohmann::json& j, const ProfileDelta& d);
void from_json(const nlohmann::json& j, ProfileDelta& d);

// Replays `delta` entry by entry over `before`.
LearnerProfile apply_delta(const LearnerProfile& before, const ProfileDelta& delta);

struct ProfileUpdate {
  LearnerProfile profile;
  ProfileDelta delta;
};

// Folds the signals of `messages` (user turns, in order) into the profile. Hits are
// applied one message at a time, so clamping happens at every step.
ProfileUpdate update_profile_from_interaction(const LearnerProfile& profile,
                                              std::span<const std::string> messages,
                                              const KeywordDictionary& dict,
                                              const UpdatePolicy& policy = {});

// Same fold over already-extracted per-message signals.
ProfileUpdate update_profile_from_signals(const LearnerProfile& profile,
                                          std::span<const SignalSet> per_message,
                                          const UpdatePolicy& policy = {});

// Bumps session_count and re-derives question_frequency over the new session count.
LearnerProfile begin_session(LearnerProfile profile);

// Counts one tool invocation under `tool_name`.
ProfileUpdate record_tool_use(const LearnerProfile& profile, const std::string& tool_name);

}  // namespace tutor
