// Terminal client: setup wizard, chat loop, reports, fixture replay and the HTTP API.
#include <csignal>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tutor/api.hpp"
#include "tutor/errors.hpp"
#include "tutor/mock_provider.hpp"
#include "tutor/orchestrator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tutor;

namespace {

struct GlobalOptions {
  std::string config = "tutor_config.json";
  std::string store;
  std::string dict;
  std::string provider;
};

EngineConfig load_config(const GlobalOptions& g, bool must_exist) {
  EngineConfig c;
  if (fs::exists(g.config)) {
    c = EngineConfig::load(g.config);
  } else if (must_exist) {
    throw PreconditionError("no configuration at " + g.config + "; run `tutor init` first");
  } else {
    c.store_path = (fs::path(g.config).parent_path() / "tutor.db").string();
  }
  if (!g.store.empty()) c.store_path = g.store;
  if (!g.dict.empty()) c.dictionary_path = g.dict;
  if (!g.provider.empty()) c.provider = g.provider;
  return c;
}

// The mock provider answers in-process so chat and serve work without any server.
std::unique_ptr<Engine> make_engine(const EngineConfig& config) {
  EngineDependencies deps;
  if (config.provider == "mock") deps.transport = std::make_shared<MockTransport>(std::make_shared<MockResponder>());
  return std::make_unique<Engine>(config, std::move(deps));
}

std::string resolve_student(const EngineConfig& c, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (c.student_id.empty()) throw PreconditionError("no learner configured; pass --student or run `tutor init`");
  return c.student_id;
}

std::string ask(const std::string& question, const std::string& fallback) {
  std::cout << question;
  if (!fallback.empty()) std::cout << " [" << fallback << "]";
  std::cout << ": " << std::flush;
  std::string line;
  if (!std::getline(std::cin, line)) throw PreconditionError("setup aborted: input ended");
  return line.empty() ? fallback : line;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : ", ") + n;
  return out;
}

// Fills each step from flags, asking on stdin for anything missing or invalid.
int cmd_init(const GlobalOptions& g, WizardAnswers a, const std::string& subjects, bool interactive) {
  if (fs::exists(g.config)) {
    const auto r = run_setup_wizard(a, g.config);
    std::cout << "Loaded saved configuration for " << r.config.student_name << " (" << r.config.student_id
              << "), provider " << r.config.provider << ".\n";
    return 0;
  }
  const auto base = load_config(g, false);
  a.subjects = split_list(subjects);
  std::vector<std::string> provider_names;
  for (const auto& p : base.providers) provider_names.push_back(p.name);
  const auto& t = default_templates();
  std::vector<std::string> styles, levels;
  for (const auto& [k, v] : t.teaching_styles) styles.push_back(k);
  for (const auto& [k, v] : t.detail_levels) levels.push_back(k);

  for (int step = 1; step <= 4; ++step) {
    while (true) {
      try {
        validate_wizard_step(step, a, base);
        break;
      } catch (const WizardStepError& e) {
        const bool untouched = (step == 1 && a.provider.empty()) || (step == 2 && a.teaching_style.empty()) ||
                               (step == 3 && a.detail_level.empty()) || (step == 4 && a.name.empty());
        if (!interactive) throw;
        if (!untouched) std::cerr << e.what() << '\n';
      }
      switch (step) {
        case 1:
          a.provider = ask("Step 1/4 provider (" + join_names(provider_names) + ")", "mock");
          break;
        case 2:
          a.teaching_style = ask("Step 2/4 teaching style (" + join_names(styles) + ")", "balanced");
          break;
        case 3:
          a.detail_level = ask("Step 3/4 detail level (" + join_names(levels) + ")", "standard");
          break;
        default: {
          a.name = ask("Step 4/4 student name", a.name);
          const auto grade = ask("         grade (1-12)", a.grade > 0 ? std::to_string(a.grade) : "");
          try {
            a.grade = std::stoi(grade);
          } catch (const std::exception&) {
            a.grade = 0;
          }
          a.subjects = split_list(ask("         subjects (comma separated)", join_names(a.subjects)));
          a.learning_goal = ask("         learning goal", a.learning_goal);
        }
      }
    }
  }
  const auto r = run_setup_wizard(a, g.config, base);
  std::cout << "Saved configuration to " << g.config << " for learner " << r.config.student_id << ".\n";
  return 0;
}

std::string show(const json& v) {
  if (!v.is_number_float()) return v.dump();
  std::ostringstream out;
  out << std::setprecision(6) << v.get<double>();
  return out.str();
}

void print_internals(const TurnResult& turn) {
  std::cout << "  [subject: " << to_string(turn.subject) << "]\n";
  for (const auto& e : turn.delta.entries) {
    std::cout << "  [delta " << e.path << ": " << show(e.old_value) << " -> " << show(e.new_value);
    if (!e.trigger.empty()) std::cout << " (" << e.trigger << ")";
    std::cout << "]\n";
  }
  if (turn.strategy.empty()) {
    std::cout << "  [no strategy rules fired]\n";
    return;
  }
  std::istringstream block(turn.strategy.rendered);
  for (std::string line; std::getline(block, line);) std::cout << "  | " << line << '\n';
}

// Slash commands map onto the registered tools.
bool run_slash(Engine& engine, const std::string& session, const std::string& line, int grade) {
  std::istringstream in(line.substr(1));
  std::string cmd;
  in >> cmd;
  std::string rest;
  std::getline(in, rest);
  if (const auto b = rest.find_first_not_of(' '); b != std::string::npos) rest = rest.substr(b);
  try {
    std::string out;
    if (cmd == "calc") {
      out = engine.use_tool(session, "calculator", {{"expression", rest}});
    } else if (cmd == "kb") {
      out = engine.use_tool(session, "knowledge_base", {{"query", rest}, {"grade", grade}});
    } else if (cmd == "convert") {
      std::istringstream args(rest);
      double value = 0;
      std::string from, to;
      if (!(args >> value >> from >> to)) throw PreconditionError("usage: /convert <value> <from> <to>");
      out = engine.use_tool(session, "unit_converter", {{"value", value}, {"from", from}, {"to", to}});
    } else if (cmd == "times") {
      out = engine.use_tool(session, "times_table", {{"number", std::stoi(rest)}});
    } else if (cmd == "help") {
      out = "/calc <expr>, /kb <topic>, /convert <value> <from> <to>, /times <n>, /quit";
    } else {
      out = "unknown command /" + cmd + " (try /help)";
    }
    std::cout << out << '\n';
  } catch (const std::invalid_argument&) {
    std::cout << "error: expected a number\n";
  } catch (const Error& e) {
    std::cout << "error: " << e.what() << '\n';
  }
  return true;
}

int cmd_chat(const GlobalOptions& g, const std::string& student_flag, bool show_internals) {
  const auto config = load_config(g, true);
  auto owned = make_engine(config);
  auto& engine = *owned;
  const auto student = resolve_student(config, student_flag);
  const auto grade = engine.profile(student).contextual.grade;
  const auto session = engine.open_session(student);
  std::cout << "Chatting as " << student << " via " << config.provider << ". /help lists tools, /quit ends.\n";
  for (std::string line;;) {
    std::cout << "> " << std::flush;
    if (!std::getline(std::cin, line) || line == "/quit" || line == "/exit") break;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (line.front() == '/') {
      run_slash(engine, session, line, grade);
      continue;
    }
    try {
      const auto turn = engine.handle_turn(session, line);
      if (show_internals) print_internals(turn);
      std::cout << turn.reply << '\n';
    } catch (const Error& e) {
      std::cout << "error: " << e.what() << '\n';
    }
  }
  engine.close_session(session);
  return 0;
}

int cmd_profile_show(const GlobalOptions& g, const std::string& student_flag) {
  const auto config = load_config(g, true);
  Engine engine(config);
  std::cout << json(engine.profile(resolve_student(config, student_flag))).dump(2) << '\n';
  return 0;
}

int cmd_report(const GlobalOptions& g, const std::string& student_flag, bool as_json) {
  const auto config = load_config(g, true);
  Engine engine(config);
  const auto report = engine.assessment(resolve_student(config, student_flag));
  if (as_json) {
    std::cout << json(report).dump(2) << '\n';
  } else {
    std::cout << render_report_table(report);
  }
  return 0;
}

int cmd_replay(const std::string& fixture, bool transcript) {
  const auto report = run_replay_file(fixture);
  int failures = 0;
  for (const auto& t : report.turns) {
    std::cout << "turn " << t.index << " [" << to_string(t.result.subject) << "] fired:";
    for (const auto& id : t.result.strategy.fired) std::cout << ' ' << id;
    std::cout << (t.failures.empty() ? "  ok" : "  FAILED") << '\n';
    for (const auto& f : t.failures) std::cout << "  - " << f << '\n';
    failures += static_cast<int>(t.failures.size());
  }
  if (transcript) std::cout << report.transcript().dump(2) << '\n';
  std::cout << report.name << ": " << (report.passed() ? "passed" : std::to_string(failures) + " failure(s)") << '\n';
  return report.passed() ? 0 : 1;
}

ApiServer* g_server = nullptr;
MockLlmServer* g_mock = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
  if (g_mock) g_mock->stop();
}

bool is_loopback(const std::string& host) {
  return host == "127.0.0.1" || host == "localhost" || host == "::1";
}

int cmd_serve(const GlobalOptions& g, const std::string& host, int port) {
  const auto config = load_config(g, false);
  auto engine = make_engine(config);
  ApiServer server(*engine);
  if (!is_loopback(host)) std::cerr << "warning: serving without authentication on " << host << '\n';
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "API listening on http://" << host << ':' << port << std::endl;
  server.run(host, port);
  return 0;
}

int cmd_mock_server(const std::string& host, int port) {
  MockLlmServer server(std::make_shared<MockResponder>());
  g_mock = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "mock chat-completion server on http://" << host << ':' << port << std::endl;
  server.run(host, port);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive tutoring engine"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--config", g.config, "Configuration file")->envname("TUTOR_CONFIG");
  app.add_option("--store", g.store, "Profile store (SQLite path or :memory:)")->envname("TUTOR_STORE");
  app.add_option("--dict", g.dict, "Keyword dictionary JSON")->envname("TUTOR_DICT");
  app.add_option("--provider", g.provider, "Provider name from the registry");

  WizardAnswers answers;
  std::string subjects;
  bool no_input = false;
  auto* init = app.add_subcommand("init", "Four-step setup wizard; reloads the saved setup when present");
  init->add_option("--style", answers.teaching_style, "Teaching style");
  init->add_option("--detail", answers.detail_level, "Detail level");
  init->add_option("--name", answers.name, "Student name");
  init->add_option("--grade", answers.grade, "Grade 1-12");
  init->add_option("--subjects", subjects, "Comma-separated subjects");
  init->add_option("--goal", answers.learning_goal, "Learning goal");
  init->add_flag("--no-input", no_input, "Fail instead of asking for missing answers");

  std::string student;
  bool show_internals = false;
  auto* chat = app.add_subcommand("chat", "Interactive tutoring session");
  chat->add_option("--student", student, "Learner id (default: the configured learner)");
  chat->add_flag("--show-internals", show_internals, "Print profile deltas and the strategy block each turn");

  auto* profile = app.add_subcommand("profile", "Learner profile");
  profile->require_subcommand(1);
  auto* show = profile->add_subcommand("show", "Print the stored profile as JSON");
  show->add_option("--student", student, "Learner id");

  bool as_json = false;
  auto* report = app.add_subcommand("report", "Five-dimension assessment");
  report->add_option("--student", student, "Learner id");
  report->add_flag("--json", as_json, "Print JSON instead of a table");

  std::string fixture;
  bool transcript = false;
  auto* replay = app.add_subcommand("replay", "Run a fixture against the mock provider");
  replay->add_option("fixture", fixture, "Fixture JSON file")->required()->check(CLI::ExistingFile);
  replay->add_flag("--transcript", transcript, "Print the full transcript");

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "HTTP API");
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--port", port, "Port")->capture_default_str();

  int mock_port = 8089;
  auto* mock = app.add_subcommand("mock-server", "Local mock chat-completion endpoint");
  mock->add_option("--host", host, "Bind address")->capture_default_str();
  mock->add_option("--port", mock_port, "Port")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*init) {
      answers.provider = g.provider;
      return cmd_init(g, answers, subjects, !no_input);
    }
    if (*chat) return cmd_chat(g, student, show_internals);
    if (*show) return cmd_profile_show(g, student);
    if (*report) return cmd_report(g, student, as_json);
    if (*replay) return cmd_replay(fixture, transcript);
    if (*serve) return cmd_serve(g, host, port);
    if (*mock) return cmd_mock_server(host, mock_port);
  } catch (const WizardStepError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
