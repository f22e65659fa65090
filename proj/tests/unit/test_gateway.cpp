#include <doctest.h>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "tutor/errors.hpp"
#include "tutor/gateway.hpp"
#include "tutor/mock_provider.hpp"

using namespace tutor;
using nlohmann::json;

namespace {

struct Recorder {
  std::vector<std::chrono::milliseconds> sleeps;
  Sleeper sleeper() {
    return [this](std::chrono::milliseconds d) { sleeps.push_back(d); };
  }
};

EnvLookup fake_keys() {
  return [](const std::string& name) -> std::optional<std::string> { return "key-for-" + name; };
}

std::vector<ProviderConfig> seven_providers() {
  std::vector<ProviderConfig> out;
  for (const auto& p : shipped_providers()) {
    if (p.name != "mock") out.push_back(p);
  }
  return out;
}

// Same config with the origin swapped for the local server; the path is kept.
ProviderConfig pointed_at(ProviderConfig c, const std::string& origin) {
  const auto scheme = c.base_url.find("://");
  const auto path = c.base_url.find('/', scheme + 3);
  c.base_url = origin + (path == std::string::npos ? "" : c.base_url.substr(path));
  return c;
}

const std::vector<ChatMessage> kMessages = {{Role::system, "be kind"}, {Role::user, "hello"}};

}  // namespace

TEST_CASE("seven shipped providers plus the mock") {
  const auto seven = seven_providers();
  REQUIRE(seven.size() == 7);
  std::set<std::string> names;
  for (const auto& p : seven) {
    names.insert(p.name);
    CHECK_FALSE(p.api_key_env.empty());
    CHECK_FALSE(p.model.empty());
  }
  CHECK(names == std::set<std::string>{"deepseek", "glm", "kimi", "doubao", "qwen", "seed", "innospark"});
  CHECK(find_provider(shipped_providers(), "mock").api_key_env.empty());
  CHECK_THROWS_AS(find_provider(shipped_providers(), "nope"), ConfigError);
}

TEST_CASE("request body carries only model and messages") {
  const auto body = build_request_body(shipped_providers().front(), kMessages);
  CHECK(body.size() == 2);
  CHECK(body.at("model") == shipped_providers().front().model);
  CHECK(body.at("messages").at(1) == json{{"role", "user"}, {"content", "hello"}});
}

TEST_CASE("completion parsing") {
  const auto m = parse_completion(R"({"choices":[{"message":{"role":"assistant","content":"hi"}}]})");
  CHECK(m.content == "hi");
  CHECK_THROWS_AS(parse_completion("{}"), ProtocolError);
  CHECK_THROWS_AS(parse_completion("not json"), ProtocolError);
  CHECK_THROWS_AS(parse_completion(R"({"choices":[{"message":{"role":"user","content":"x"}}]})"), ProtocolError);
}

TEST_CASE("every shipped provider takes the same path against the mock server") {
  auto responder = std::make_shared<MockResponder>();
  MockLlmServer server(responder);
  server.start();
  const std::string origin = "http://127.0.0.1:" + std::to_string(server.port());
  const ChatClient client(std::make_shared<HttplibTransport>(), {}, fake_keys());
  for (const auto& p : seven_providers()) {
    const auto c = client.complete(pointed_at(p, origin), kMessages);
    CHECK(c.attempts == 1);
    CHECK(c.message.content == "[mock] hello");
  }
  const auto reqs = responder->requests();
  REQUIRE(reqs.size() == 7);
  const auto providers = seven_providers();
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    CHECK(reqs[i].headers.at("Authorization") == "Bearer key-for-" + providers[i].api_key_env);
    CHECK(reqs[i].body.at("model") == providers[i].model);
    CHECK(reqs[i].body.at("messages") == json(kMessages));
    CHECK(reqs[i].path.ends_with("/chat/completions"));
  }
  server.stop();
}

TEST_CASE("retries back off exponentially and then succeed") {
  auto responder = std::make_shared<MockResponder>();
  responder->inject_failures({{503, {}}, {429, {}}});
  Recorder rec;
  const ChatClient client(std::make_shared<MockTransport>(responder), rec.sleeper(), fake_keys());
  auto cfg = find_provider(shipped_providers(), "deepseek");
  cfg.max_retries = 3;
  cfg.backoff_initial = std::chrono::milliseconds(100);
  const auto c = client.complete(cfg, kMessages);
  CHECK(c.attempts == 3);
  CHECK(rec.sleeps == std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(100), std::chrono::milliseconds(200)});
}

TEST_CASE("exhausted retries raise a transport error") {
  auto responder = std::make_shared<MockResponder>();
  responder->inject_failures({{500, {}}, {0, {}}, {502, {}}, {200, {}}});
  Recorder rec;
  const ChatClient client(std::make_shared<MockTransport>(responder), rec.sleeper(), fake_keys());
  const auto& cfg = find_provider(shipped_providers(), "kimi");
  CHECK_THROWS_AS(client.complete(cfg, kMessages), TransportError);
  CHECK(responder->request_count() == 3);
  CHECK(rec.sleeps == std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(500), std::chrono::milliseconds(1000)});
}

TEST_CASE("client errors are not retried") {
  auto responder = std::make_shared<MockResponder>();
  responder->inject_failures({{401, {}}});
  Recorder rec;
  const ChatClient client(std::make_shared<MockTransport>(responder), rec.sleeper(), fake_keys());
  CHECK_THROWS_AS(client.complete(find_provider(shipped_providers(), "glm"), kMessages), TransportError);
  CHECK(responder->request_count() == 1);
  CHECK(rec.sleeps.empty());
}

TEST_CASE("missing key and empty messages fail before any request") {
  auto responder = std::make_shared<MockResponder>();
  const ChatClient client(std::make_shared<MockTransport>(responder), {},
                          [](const std::string&) { return std::optional<std::string>(); });
  CHECK_THROWS_AS(client.complete(find_provider(shipped_providers(), "qwen"), kMessages), ConfigError);
  CHECK_THROWS_AS(client.complete(find_provider(shipped_providers(), "mock"), {}), PreconditionError);
  CHECK(responder->request_count() == 0);
  // The mock provider needs no key.
  CHECK(client.complete(find_provider(shipped_providers(), "mock"), kMessages).message.content == "[mock] hello");
}

TEST_CASE("the key never appears in error messages") {
  auto responder = std::make_shared<MockResponder>();
  responder->inject_failures({{403, {}}});
  const ChatClient client(std::make_shared<MockTransport>(responder), {}, fake_keys());
  try {
    client.complete(find_provider(shipped_providers(), "seed"), kMessages);
    FAIL("expected failure");
  } catch (const TransportError& e) {
    CHECK(std::string(e.what()).find("key-for-") == std::string::npos);
  }
}

TEST_CASE("unreachable server is a transport error") {
  auto cfg = find_provider(shipped_providers(), "mock");
  cfg.base_url = "http://127.0.0.1:1/v1";
  cfg.max_retries = 1;
  cfg.timeout = std::chrono::milliseconds(500);
  Recorder rec;
  const ChatClient client(std::make_shared<HttplibTransport>(), rec.sleeper(), fake_keys());
  CHECK_THROWS_AS(client.complete(cfg, kMessages), TransportError);
  CHECK(rec.sleeps.size() == 1);
}

TEST_CASE("mock script rules and fallback") {
  const auto script = MockScript::from_json(
      {{"rules", {{{"pattern", "Fraction"}, {"reply", "Let's look at fractions."}}}}, {"fallback_reply", "Go on."}});
  auto responder = std::make_shared<MockResponder>(script);
  const ChatClient client(std::make_shared<MockTransport>(responder), {}, fake_keys());
  const auto& mock = find_provider(shipped_providers(), "mock");
  std::vector<ChatMessage> msgs = {{Role::user, "my FRACTION homework"}};
  CHECK(client.complete(mock, msgs).message.content == "Let's look at fractions.");
  msgs = {{Role::user, "something else"}};
  CHECK(client.complete(mock, msgs).message.content == "Go on.");
}

TEST_CASE("provider config JSON") {
  const auto& p = find_provider(shipped_providers(), "doubao");
  const json j = p;
  const auto back = j.get<ProviderConfig>();
  CHECK(back.base_url == p.base_url);
  CHECK(back.timeout == p.timeout);
  CHECK_FALSE(j.dump().find("key-for") != std::string::npos);
}
