#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tutor/assessment.hpp"
#include "tutor/errors.hpp"
#include "tutor/gateway.hpp"
#include "tutor/profile.hpp"
#include "tutor/prompt.hpp"
#include "tutor/sensory.hpp"
#include "tutor/store.hpp"
#include "tutor/strategy.hpp"
#include "tutor/tools.hpp"
#include "tutor/updater.hpp"

namespace tutor {

// Everything the engine needs to start, persisted as one JSON file. API keys are never
// stored here; providers name the environment variable that holds theirs.
struct EngineConfig {
  std::string provider = "mock";
  std::vector<ProviderConfig> providers = shipped_providers();
  UpdatePolicy policy;
  PromptOptions prompt;
  AssessmentOptions assessment;
  std::string store_path = ":memory:";
  std::string dictionary_path;  // empty: bundled English dictionary
  std::string templates_dir;    // empty: bundled HEADS templates
  std::string rules_path;       // empty: bundled rule texts
  std::string corpus_path;      // empty: bundled knowledge corpus
  std::string student_id;
  std::string student_name;

  static EngineConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  const ProviderConfig& active_provider() const;
};

void to_json(nlohmann::json& j, const EngineConfig& c);
void from_json(const nlohmann::json& j, EngineConfig& c);

struct TurnRecord {
  IntentCategory subject = IntentCategory::general;
  ProfileDelta delta;
  StrategyBlock strategy;
};

// Per-session state. `history` holds completed user/assistant exchanges only; the
// system prompt is rebuilt every turn.
struct SessionState {
  std::string session_id;
  std::string student_id;
  IntentCategory active_subject = IntentCategory::general;
  std::vector<ChatMessage> history;
  std::string provider;
  Timestamp started_at{};

  std::vector<std::string> user_messages;  // every user turn, including failed ones
  std::size_t consumed = 0;                // user_messages already folded into the profile
  std::string last_prompt;
  std::vector<TurnRecord> turns;
  bool open = true;
};

struct TurnResult {
  std::string reply;
  IntentCategory subject = IntentCategory::general;
  ProfileDelta delta;
  StrategyBlock strategy;
  PromptBundle prompt;
};

struct EngineDependencies {
  std::shared_ptr<Store> store;               // default: opened from config.store_path
  std::shared_ptr<HttpTransport> transport;   // default: real HTTP
  Sleeper sleeper;                            // default: std::this_thread::sleep_for
  EnvLookup env;                              // default: process environment
  Clock clock;                                // default: system clock
};

class Engine {
public:
  explicit Engine(EngineConfig config, EngineDependencies deps = {});

  // Bumps the learner's session counter. Throws NotFoundError for an unknown learner.
  std::string open_session(const std::string& student_id);
  // Appends one session_summary memory record and forgets the session.
  void close_session(const std::string& session_id);

  // load profile -> route -> extract signals -> update + persist -> strategy -> prompt -> model.
  // The profile update is persisted before the model call, so a failed call keeps it.
  TurnResult handle_turn(const std::string& session_id, const std::string& user_text);

  // Runs a registered tool and counts it in the learner's tool_usage.
  std::string use_tool(const std::string& session_id, const std::string& tool, const nlohmann::json& args);

  LearnerProfile profile(const std::string& student_id) const;
  AssessmentReport assessment(const std::string& student_id) const;
  // Copy of an open session; throws NotFoundError otherwise.
  SessionState session(const std::string& session_id) const;

  const EngineConfig& config() const noexcept { return config_; }
  Store& store() noexcept { return *store_; }
  const KeywordDictionary& dictionary() const noexcept { return dictionary_; }
  const ToolRegistry& tools() const noexcept { return tools_; }
  Timestamp now() const { return clock_(); }

private:
  struct SessionSlot {
    std::mutex mutex;  // one in-flight turn per session
    SessionState state;
  };

  std::shared_ptr<SessionSlot> slot(const std::string& session_id) const;
  std::mutex& student_lock(const std::string& student_id);

  EngineConfig config_;
  KeywordDictionary dictionary_;
  StrategyEngine strategy_;
  PromptAssembler assembler_;
  std::shared_ptr<const KnowledgeBase> knowledge_;
  ToolRegistry tools_;
  std::shared_ptr<Store> store_;
  ChatClient client_;
  Clock clock_;

  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<SessionSlot>> sessions_;
  std::map<std::string, std::unique_ptr<std::mutex>> student_locks_;
  std::uint64_t next_session_ = 1;
};

// --- setup wizard --------------------------------------------------------------------

// The four steps: provider, teaching style, detail level, student info.
struct WizardAnswers {
  std::string provider;
  std::string teaching_style;
  std::string detail_level;
  std::string name;
  int grade = 0;
  std::vector<std::string> subjects;
  std::string learning_goal;
};

class WizardStepError : public PreconditionError {
public:
  WizardStepError(int step, const std::string& what) : PreconditionError(what), step_(step) {}
  int step() const noexcept { return step_; }

private:
  int step_;
};

// Checks one step (1-4) of the answers against `base`. Throws WizardStepError.
void validate_wizard_step(int step, const WizardAnswers& answers, const EngineConfig& base);

std::string student_id_from_name(const std::string& name);

struct SetupResult {
  EngineConfig config;
  LearnerProfile profile;
  bool loaded_existing = false;
};

// First run: validates the answers, writes the config file, seeds the learner profile
// and a student_profile memory. Later runs load the saved config and profile instead.
SetupResult run_setup_wizard(const WizardAnswers& answers, const std::filesystem::path& config_path,
                             EngineConfig base = {}, Clock clock = system_now);

// --- transcript replay ---------------------------------------------------------------

struct TurnOutcome {
  std::size_t index = 0;
  std::string user;
  TurnResult result;
  std::vector<std::string> failures;
};

struct ReplayReport {
  std::string name;
  std::vector<TurnOutcome> turns;

  bool passed() const;
  // Deltas, fired rules, prompts and replies; byte-stable across runs.
  nlohmann::json transcript() const;
};

// Runs a fixture against an in-memory store and the in-process mock provider.
ReplayReport run_replay(const nlohmann::json& fixture);
ReplayReport run_replay_file(const std::filesystem::path& path);

}  // namespace tutor
