#include "tutor/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "tutor/errors.hpp"
#include "tutor/mock_provider.hpp"

namespace tutor {

using nlohmann::json;

namespace {

bool blank(std::string_view text) {
  return std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

KeywordDictionary dictionary_for(const EngineConfig& c) {
  return c.dictionary_path.empty() ? default_dictionary() : load_dictionary(c.dictionary_path);
}

StrategyEngine strategy_for(const EngineConfig& c) {
  return c.rules_path.empty() ? StrategyEngine() : StrategyEngine(load_rule_templates(c.rules_path));
}

PromptAssembler assembler_for(const EngineConfig& c) {
  return PromptAssembler(c.templates_dir.empty() ? default_templates() : load_templates(c.templates_dir),
                         c.prompt);
}

std::shared_ptr<const KnowledgeBase> knowledge_for(const EngineConfig& c) {
  if (c.corpus_path.empty()) return std::make_shared<KnowledgeBase>(KnowledgeBase::bundled());
  return std::make_shared<KnowledgeBase>(KnowledgeBase::load(c.corpus_path));
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

std::string session_summary(const SessionState& s, const LearnerProfile& p) {
  std::vector<std::string> subjects;
  std::set<std::string> fired;
  for (const auto& t : s.turns) {
    const std::string name(to_string(t.subject));
    if (std::find(subjects.begin(), subjects.end(), name) == subjects.end()) subjects.push_back(name);
    fired.insert(t.strategy.fired.begin(), t.strategy.fired.end());
  }
  std::ostringstream out;
  out << "Session " << s.session_id << ": " << s.turns.size() << " turn(s)";
  out << "; subjects: " << (subjects.empty() ? "none" : join(subjects, ", "));
  out << "; rules fired: "
      << (fired.empty() ? "none" : join(std::vector<std::string>(fired.begin(), fired.end()), ", "));
  const auto& weak = p.cognitive.weak_topics;
  out << "; weak topics: "
      << (weak.empty() ? "none" : join(std::vector<std::string>(weak.begin(), weak.end()), ", "));
  return out.str();
}

}  // namespace

// --- config ----------------------------------------------------------------------------

void to_json(json& j, const EngineConfig& c) {
  json weights = json::object();
  for (auto d : kAllDimensions) weights[std::string(to_string(d))] = c.assessment.weights.at(d);
  j = json{{"provider", c.provider},
           {"providers", c.providers},
           {"policy", c.policy},
           {"prompt", {{"teaching_style", c.prompt.teaching_style}, {"detail_level", c.prompt.detail_level}}},
           {"assessment",
            {{"weights", weights},
             {"behavioral_saturation_sessions", c.assessment.behavioral_saturation_sessions}}},
           {"store_path", c.store_path},
           {"dictionary_path", c.dictionary_path},
           {"templates_dir", c.templates_dir},
           {"rules_path", c.rules_path},
           {"corpus_path", c.corpus_path},
           {"student_id", c.student_id},
           {"student_name", c.student_name}};
}

void from_json(const json& j, EngineConfig& c) {
  const EngineConfig d;
  c.provider = j.value("provider", d.provider);
  c.providers = j.contains("providers") ? j.at("providers").get<std::vector<ProviderConfig>>() : d.providers;
  c.policy = j.contains("policy") ? j.at("policy").get<UpdatePolicy>() : d.policy;
  if (const auto it = j.find("prompt"); it != j.end()) {
    c.prompt.teaching_style = it->value("teaching_style", d.prompt.teaching_style);
    c.prompt.detail_level = it->value("detail_level", d.prompt.detail_level);
  }
  if (const auto it = j.find("assessment"); it != j.end()) {
    if (const auto w = it->find("weights"); w != it->end()) {
      c.assessment.weights.clear();
      for (auto dim : kAllDimensions) {
        const std::string name(to_string(dim));
        if (w->contains(name)) c.assessment.weights[dim] = w->at(name).get<double>();
      }
      validate_weights(c.assessment.weights);
    }
    c.assessment.behavioral_saturation_sessions =
        it->value("behavioral_saturation_sessions", d.assessment.behavioral_saturation_sessions);
  }
  c.store_path = j.value("store_path", d.store_path);
  c.dictionary_path = j.value("dictionary_path", d.dictionary_path);
  c.templates_dir = j.value("templates_dir", d.templates_dir);
  c.rules_path = j.value("rules_path", d.rules_path);
  c.corpus_path = j.value("corpus_path", d.corpus_path);
  c.student_id = j.value("student_id", d.student_id);
  c.student_name = j.value("student_name", d.student_name);
}

EngineConfig EngineConfig::load(const std::filesystem::path& path) {
  try {
    return read_json_file(path).get<EngineConfig>();
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  } catch (const PreconditionError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void EngineConfig::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << json(*this).dump(2) << '\n';
    if (!out) throw ConfigError("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

const ProviderConfig& EngineConfig::active_provider() const { return find_provider(providers, provider); }

// --- engine ----------------------------------------------------------------------------

Engine::Engine(EngineConfig config, EngineDependencies deps)
    : config_(std::move(config)),
      dictionary_(dictionary_for(config_)),
      strategy_(strategy_for(config_)),
      assembler_(assembler_for(config_)),
      knowledge_(knowledge_for(config_)),
      tools_(builtin_tools(knowledge_)),
      store_(deps.store ? std::move(deps.store) : open_store(config_.store_path)),
      client_(deps.transport ? std::move(deps.transport) : std::make_shared<HttplibTransport>(),
              std::move(deps.sleeper), deps.env ? std::move(deps.env) : EnvLookup(process_env)),
      clock_(deps.clock ? std::move(deps.clock) : Clock(system_now)) {
  config_.policy.validate();
  validate_weights(config_.assessment.weights);
  (void)config_.active_provider();
}

std::shared_ptr<Engine::SessionSlot> Engine::slot(const std::string& session_id) const {
  std::lock_guard lock(sessions_mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw NotFoundError("no open session " + session_id);
  return it->second;
}

std::mutex& Engine::student_lock(const std::string& student_id) {
  std::lock_guard lock(sessions_mutex_);
  auto& m = student_locks_[student_id];
  if (!m) m = std::make_unique<std::mutex>();
  return *m;
}

std::string Engine::open_session(const std::string& student_id) {
  std::lock_guard student(student_lock(student_id));
  auto profile = store_->load_profile(student_id);
  if (!profile) throw NotFoundError("unknown learner " + student_id);
  auto updated = begin_session(std::move(*profile));
  const auto now = clock_();
  updated.updated_at = now;
  store_->save_profile(updated);

  auto s = std::make_shared<SessionSlot>();
  s->state.student_id = student_id;
  s->state.provider = config_.provider;
  s->state.started_at = now;
  std::lock_guard lock(sessions_mutex_);
  s->state.session_id = "session-" + std::to_string(next_session_++);
  sessions_[s->state.session_id] = s;
  return s->state.session_id;
}

void Engine::close_session(const std::string& session_id) {
  auto s = slot(session_id);
  std::lock_guard turn(s->mutex);
  if (!s->state.open) throw NotFoundError("no open session " + session_id);
  {
    std::lock_guard student(student_lock(s->state.student_id));
    const auto profile = store_->load_profile(s->state.student_id);
    if (!profile) throw NotFoundError("unknown learner " + s->state.student_id);
    store_->append_memory({s->state.student_id, MemoryCategory::session_summary,
                           session_summary(s->state, *profile), clock_()});
  }
  s->state.open = false;
  std::lock_guard lock(sessions_mutex_);
  sessions_.erase(session_id);
}

TurnResult Engine::handle_turn(const std::string& session_id, const std::string& user_text) {
  if (blank(user_text)) throw PreconditionError("user message is empty");
  auto s = slot(session_id);
  std::lock_guard turn(s->mutex);
  auto& state = s->state;
  if (!state.open) throw NotFoundError("no open session " + session_id);

  TurnResult result;
  {
    std::lock_guard student(student_lock(state.student_id));
    auto profile = store_->load_profile(state.student_id);
    if (!profile) throw NotFoundError("unknown learner " + state.student_id);

    result.subject = route(user_text, dictionary_);
    state.active_subject = result.subject;
    state.user_messages.push_back(user_text);

    const std::span<const std::string> pending =
        std::span<const std::string>(state.user_messages).subspan(state.consumed);
    auto update = update_profile_from_interaction(*profile, pending, dictionary_, config_.policy);
    state.consumed = state.user_messages.size();
    update.profile.updated_at = clock_();
    store_->save_profile(update.profile);

    result.delta = std::move(update.delta);
    result.strategy = strategy_.generate(update.profile);
    result.prompt = assembler_.compose(result.subject, update.profile, result.strategy);
  }
  state.last_prompt = result.prompt.system_prompt;
  state.turns.push_back({result.subject, result.delta, result.strategy});

  std::vector<ChatMessage> messages;
  messages.reserve(state.history.size() + 2);
  messages.push_back({Role::system, result.prompt.system_prompt});
  messages.insert(messages.end(), state.history.begin(), state.history.end());
  messages.push_back({Role::user, user_text});

  auto completion = client_.complete(config_.active_provider(), messages);
  result.reply = completion.message.content;
  state.history.push_back({Role::user, user_text});
  state.history.push_back({Role::assistant, result.reply});
  return result;
}

std::string Engine::use_tool(const std::string& session_id, const std::string& tool, const json& args) {
  auto s = slot(session_id);
  std::lock_guard turn(s->mutex);
  const auto output = tools_.dispatch(tool, args);
  std::lock_guard student(student_lock(s->state.student_id));
  auto profile = store_->load_profile(s->state.student_id);
  if (!profile) throw NotFoundError("unknown learner " + s->state.student_id);
  auto update = record_tool_use(*profile, tool);
  update.profile.updated_at = clock_();
  store_->save_profile(update.profile);
  return output;
}

LearnerProfile Engine::profile(const std::string& student_id) const {
  auto p = store_->load_profile(student_id);
  if (!p) throw NotFoundError("unknown learner " + student_id);
  return *p;
}

AssessmentReport Engine::assessment(const std::string& student_id) const {
  return assess_profile(profile(student_id), config_.assessment, clock_());
}

SessionState Engine::session(const std::string& session_id) const {
  auto s = slot(session_id);
  std::lock_guard turn(s->mutex);
  return s->state;
}

// --- wizard ----------------------------------------------------------------------------

void validate_wizard_step(int step, const WizardAnswers& a, const EngineConfig& base) {
  const auto& templates = default_templates();
  switch (step) {
    case 1:
      if (std::none_of(base.providers.begin(), base.providers.end(),
                       [&](const ProviderConfig& p) { return p.name == a.provider; })) {
        throw WizardStepError(1, "step 1 (provider): unknown provider '" + a.provider + "'");
      }
      return;
    case 2:
      if (!templates.teaching_styles.contains(a.teaching_style)) {
        throw WizardStepError(2, "step 2 (teaching style): unknown style '" + a.teaching_style + "'");
      }
      return;
    case 3:
      if (!templates.detail_levels.contains(a.detail_level)) {
        throw WizardStepError(3, "step 3 (detail level): unknown level '" + a.detail_level + "'");
      }
      return;
    case 4:
      if (blank(a.name)) throw WizardStepError(4, "step 4 (student info): name is empty");
      if (a.grade < kMinGrade || a.grade > kMaxGrade) {
        throw WizardStepError(4, "step 4 (student info): grade must be between 1 and 12, got " +
                                     std::to_string(a.grade));
      }
      if (student_id_from_name(a.name).empty()) {
        throw WizardStepError(4, "step 4 (student info): name needs at least one letter or digit");
      }
      return;
    default:
      throw PreconditionError("wizard has steps 1-4, got " + std::to_string(step));
  }
}

std::string student_id_from_name(const std::string& name) {
  std::string id;
  bool dash = false;
  for (unsigned char c : name) {
    if (std::isalnum(c)) {
      if (dash && !id.empty()) id += '-';
      id += static_cast<char>(std::tolower(c));
      dash = false;
    } else if (c >= 0x80) {
      if (dash && !id.empty()) id += '-';
      id += static_cast<char>(c);
      dash = false;
    } else {
      dash = true;
    }
  }
  return id;
}

SetupResult run_setup_wizard(const WizardAnswers& answers, const std::filesystem::path& config_path,
                             EngineConfig base, Clock clock) {
  if (std::filesystem::exists(config_path)) {
    SetupResult r;
    r.config = EngineConfig::load(config_path);
    r.loaded_existing = true;
    auto store = open_store(r.config.store_path);
    auto p = store->load_profile(r.config.student_id);
    if (!p) throw NotFoundError("saved setup refers to unknown learner " + r.config.student_id);
    r.profile = std::move(*p);
    return r;
  }

  for (int step = 1; step <= 4; ++step) validate_wizard_step(step, answers, base);

  SetupResult r;
  r.config = std::move(base);
  r.config.provider = answers.provider;
  r.config.prompt.teaching_style = answers.teaching_style;
  r.config.prompt.detail_level = answers.detail_level;
  r.config.student_name = answers.name;
  r.config.student_id = student_id_from_name(answers.name);

  const auto now = clock();
  auto store = open_store(r.config.store_path);
  if (auto existing = store->load_profile(r.config.student_id)) {
    r.profile = std::move(*existing);
  } else {
    r.profile = default_profile(r.config.student_id, answers.grade, answers.subjects,
                                answers.learning_goal, now);
    store->save_profile(r.profile);
    std::ostringstream content;
    content << "name: " << answers.name << "; grade: " << answers.grade
            << "; subjects: " << (answers.subjects.empty() ? "none" : join(answers.subjects, ", "))
            << "; goal: " << (answers.learning_goal.empty() ? "not set" : answers.learning_goal);
    store->append_memory({r.config.student_id, MemoryCategory::student_profile, content.str(), now});
  }
  r.config.save(config_path);
  return r;
}

// --- replay ----------------------------------------------------------------------------

namespace {

constexpr std::int64_t kReplayEpochMs = 1'767'225'600'000;  // 2026-01-01T00:00:00Z
constexpr double kReplayTolerance = 1e-9;

bool same_value(const json& expected, const json& actual) {
  if (expected.is_number() && actual.is_number()) {
    return std::abs(expected.get<double>() - actual.get<double>()) <= kReplayTolerance;
  }
  return expected == actual;
}

LearnerProfile seeded_profile(const json& fixture) {
  const auto& student = fixture.at("student");
  auto p = default_profile(student.at("id").get<std::string>(), student.at("grade").get<int>(),
                           student.value("subjects", std::vector<std::string>{}),
                           student.value("goal", std::string()), from_millis(kReplayEpochMs));
  if (const auto seed = fixture.find("seed"); seed != fixture.end()) {
    json doc = p;
    for (const auto& [pointer, value] : seed->items()) doc[json::json_pointer(pointer)] = value;
    p = doc.get<LearnerProfile>();
    validate(p);
  }
  return p;
}

std::vector<std::string> check_turn(const json& expect, const TurnResult& r, const LearnerProfile& after) {
  std::vector<std::string> failures;
  if (const auto it = expect.find("subject"); it != expect.end()) {
    if (it->get<std::string>() != to_string(r.subject)) {
      failures.push_back("subject: expected " + it->get<std::string>() + ", got " +
                         std::string(to_string(r.subject)));
    }
  }
  for (const auto& want : expect.value("delta", json::array())) {
    const auto path = want.at("path").get<std::string>();
    const auto found = std::find_if(r.delta.entries.begin(), r.delta.entries.end(),
                                    [&](const DeltaEntry& e) { return e.path == path; });
    if (found == r.delta.entries.end()) {
      failures.push_back("delta: no entry for " + path);
      continue;
    }
    if (want.contains("old") && !same_value(want.at("old"), found->old_value)) {
      failures.push_back("delta " + path + ": old " + found->old_value.dump() + ", expected " +
                         want.at("old").dump());
    }
    if (want.contains("new") && !same_value(want.at("new"), found->new_value)) {
      failures.push_back("delta " + path + ": new " + found->new_value.dump() + ", expected " +
                         want.at("new").dump());
    }
  }
  for (const auto& path : expect.value("delta_absent", std::vector<std::string>{})) {
    const bool present = std::any_of(r.delta.entries.begin(), r.delta.entries.end(),
                                     [&](const DeltaEntry& e) { return e.path == path; });
    if (present) failures.push_back("delta: unexpected entry for " + path);
  }
  const json doc = after;
  const json profile_expect = expect.value("profile", json::object());
  for (const auto& [pointer, value] : profile_expect.items()) {
    const json::json_pointer ptr(pointer);
    if (!doc.contains(ptr)) {
      failures.push_back("profile: " + pointer + " missing");
    } else if (!same_value(value, doc.at(ptr))) {
      failures.push_back("profile " + pointer + ": " + doc.at(ptr).dump() + ", expected " + value.dump());
    }
  }
  const auto& fired = r.strategy.fired;
  for (const auto& id : expect.value("fired_include", std::vector<std::string>{})) {
    if (std::find(fired.begin(), fired.end(), id) == fired.end()) failures.push_back("rule " + id + " did not fire");
  }
  for (const auto& id : expect.value("fired_exclude", std::vector<std::string>{})) {
    if (std::find(fired.begin(), fired.end(), id) != fired.end()) failures.push_back("rule " + id + " fired");
  }
  for (const auto& text : expect.value("prompt_contains", std::vector<std::string>{})) {
    if (r.prompt.system_prompt.find(text) == std::string::npos) {
      failures.push_back("prompt lacks \"" + text + "\"");
    }
  }
  return failures;
}

}  // namespace

bool ReplayReport::passed() const {
  return std::all_of(turns.begin(), turns.end(), [](const TurnOutcome& t) { return t.failures.empty(); });
}

json ReplayReport::transcript() const {
  json out = json::array();
  for (const auto& t : turns) {
    out.push_back({{"turn", t.index},
                   {"user", t.user},
                   {"subject", to_string(t.result.subject)},
                   {"delta", t.result.delta},
                   {"strategy", t.result.strategy},
                   {"prompt", t.result.prompt.system_prompt},
                   {"reply", t.result.reply}});
  }
  return json{{"name", name}, {"turns", std::move(out)}};
}

ReplayReport run_replay(const json& fixture) {
  ReplayReport report;
  report.name = fixture.value("name", std::string("replay"));

  auto ticks = std::make_shared<std::atomic<std::int64_t>>(0);
  EngineDependencies deps;
  deps.store = std::make_shared<InMemoryStore>();
  auto responder = std::make_shared<MockResponder>(MockScript::from_json(fixture.value("mock", json::object())));
  deps.transport = std::make_shared<MockTransport>(responder);
  deps.sleeper = [](std::chrono::milliseconds) {};
  deps.env = [](const std::string&) { return std::optional<std::string>("replay-key"); };
  deps.clock = [ticks] { return from_millis(kReplayEpochMs + 1000 * ticks->fetch_add(1)); };

  EngineConfig config;
  config.provider = "mock";
  Engine engine(config, deps);

  const auto profile = seeded_profile(fixture);
  engine.store().save_profile(profile);

  std::string session = engine.open_session(profile.student_id);
  std::size_t index = 0;
  for (const auto& turn : fixture.at("turns")) {
    ++index;
    if (turn.value("new_session", false)) {
      engine.close_session(session);
      session = engine.open_session(profile.student_id);
    }
    TurnOutcome outcome;
    outcome.index = index;
    outcome.user = turn.at("user").get<std::string>();
    try {
      outcome.result = engine.handle_turn(session, outcome.user);
      outcome.failures =
          check_turn(turn.value("expect", json::object()), outcome.result, engine.profile(profile.student_id));
    } catch (const Error& e) {
      outcome.failures.push_back(std::string("turn failed: ") + e.what());
    }
    report.turns.push_back(std::move(outcome));
  }
  engine.close_session(session);
  return report;
}

ReplayReport run_replay_file(const std::filesystem::path& path) { return run_replay(read_json_file(path)); }

}  // namespace tutor
