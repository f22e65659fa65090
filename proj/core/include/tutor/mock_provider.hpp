#pragma once

#include <chrono>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tutor/gateway.hpp"

namespace tutor {

// Scripted behaviour of the mock chat-completion endpoint.
struct MockScript {
  struct Rule {
    std::string pattern;  // case-insensitive substring of the last user message
    std::string reply;
  };
  struct Failure {
    int status = 503;  // 0: no HTTP response at all
    std::chrono::milliseconds delay{0};
  };

  std::vector<Rule> rules;
  // Unmatched messages get `fallback_reply` when set, else `echo_prefix` + the message.
  std::string fallback_reply;
  std::string echo_prefix = "[mock] ";
  // Consumed one per request before any scripted reply is served.
  std::vector<Failure> failures;

  static MockScript from_json(const nlohmann::json& doc);
  static MockScript load(const std::filesystem::path& path);
};

struct RecordedRequest {
  std::string path;
  std::map<std::string, std::string> headers;
  nlohmann::json body;
};

// Serves the chat-completions wire protocol from a script; shared by the in-process
// transport and the HTTP server so both behave identically.
class MockResponder {
public:
  explicit MockResponder(MockScript script = {});

  // Throws TransportError for a scripted status-0 failure.
  HttpResponse handle(const std::string& path, const std::map<std::string, std::string>& headers,
                      const std::string& body);

  void inject_failures(std::vector<MockScript::Failure> failures);
  std::vector<RecordedRequest> requests() const;
  std::size_t request_count() const;

private:
  mutable std::mutex mutex_;
  MockScript script_;
  std::deque<MockScript::Failure> pending_failures_;
  std::vector<RecordedRequest> requests_;
  std::size_t served_ = 0;
};

// Hands requests straight to a responder, no sockets.
class MockTransport final : public HttpTransport {
public:
  explicit MockTransport(std::shared_ptr<MockResponder> responder);
  HttpResponse post(const HttpRequest& request) override;

private:
  std::shared_ptr<MockResponder> responder_;
};

// A local HTTP process serving POST {any prefix}/chat/completions.
class MockLlmServer {
public:
  explicit MockLlmServer(std::shared_ptr<MockResponder> responder);
  ~MockLlmServer();
  MockLlmServer(const MockLlmServer&) = delete;
  MockLlmServer& operator=(const MockLlmServer&) = delete;

  // Binds and starts serving on a background thread; port 0 picks a free port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  // Blocks the calling thread until stop() is called from elsewhere.
  void run(const std::string& host, int port);
  void stop();

  int port() const noexcept { return port_; }
  std::string base_url() const;
  MockResponder& responder() { return *responder_; }

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::shared_ptr<MockResponder> responder_;
  int port_ = 0;
};

}  // namespace tutor
