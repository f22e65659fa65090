#include "tutor/mock_provider.hpp"

#include <fstream>
#include <thread>

#include <httplib.h>

#include "tutor/errors.hpp"
#include "tutor/sensory.hpp"

namespace tutor {

using nlohmann::json;

MockScript MockScript::from_json(const json& doc) {
  MockScript s;
  for (const auto& r : doc.value("rules", json::array())) {
    s.rules.push_back({r.at("pattern").get<std::string>(), r.at("reply").get<std::string>()});
  }
  s.fallback_reply = doc.value("fallback_reply", "");
  s.echo_prefix = doc.value("echo_prefix", s.echo_prefix);
  for (const auto& f : doc.value("failures", json::array())) {
    s.failures.push_back({f.value("status", 503), std::chrono::milliseconds(f.value("delay_ms", 0))});
  }
  return s;
}

MockScript MockScript::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mock script " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw ConfigError("malformed mock script " + path.string() + ": " + e.what());
  }
}

MockResponder::MockResponder(MockScript script)
    : script_(std::move(script)), pending_failures_(script_.failures.begin(), script_.failures.end()) {}

void MockResponder::inject_failures(std::vector<MockScript::Failure> failures) {
  std::lock_guard lock(mutex_);
  pending_failures_.insert(pending_failures_.end(), failures.begin(), failures.end());
}

std::vector<RecordedRequest> MockResponder::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

std::size_t MockResponder::request_count() const {
  std::lock_guard lock(mutex_);
  return requests_.size();
}

HttpResponse MockResponder::handle(const std::string& path,
                                   const std::map<std::string, std::string>& headers,
                                   const std::string& body) {
  std::optional<MockScript::Failure> failure;
  json request;
  {
    std::lock_guard lock(mutex_);
    request = json::parse(body, nullptr, false);
    requests_.push_back({path, headers, request});
    if (!pending_failures_.empty()) {
      failure = pending_failures_.front();
      pending_failures_.pop_front();
    }
  }
  if (failure) {
    if (failure->delay.count() > 0) std::this_thread::sleep_for(failure->delay);
    if (failure->status == 0) throw TransportError("mock: connection dropped");
    return {failure->status, json{{"error", {{"message", "injected failure"}}}}.dump()};
  }

  if (request.is_discarded() || !request.contains("messages") || !request["messages"].is_array() ||
      request["messages"].empty() || !request.contains("model")) {
    return {400, json{{"error", {{"message", "expected model and a nonempty messages array"}}}}.dump()};
  }

  std::string last_user;
  for (const auto& m : request["messages"]) {
    if (m.value("role", "") == "user") last_user = m.value("content", "");
  }
  const auto needle = normalize_text(last_user);
  std::string reply;
  bool matched = false;
  for (const auto& rule : script_.rules) {
    if (needle.find(normalize_text(rule.pattern)) != std::string::npos) {
      reply = rule.reply;
      matched = true;
      break;
    }
  }
  if (!matched) reply = script_.fallback_reply.empty() ? script_.echo_prefix + last_user : script_.fallback_reply;

  std::size_t id = 0;
  {
    std::lock_guard lock(mutex_);
    id = ++served_;
  }
  json response = {
      {"id", "mock-" + std::to_string(id)},
      {"object", "chat.completion"},
      {"model", request["model"]},
      {"choices", json::array({{{"index", 0},
                                {"message", {{"role", "assistant"}, {"content", reply}}},
                                {"finish_reason", "stop"}}})},
  };
  return {200, response.dump()};
}

MockTransport::MockTransport(std::shared_ptr<MockResponder> responder) : responder_(std::move(responder)) {}

HttpResponse MockTransport::post(const HttpRequest& request) {
  const auto scheme_end = request.url.find("://");
  const auto path_start = request.url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  const auto path = path_start == std::string::npos ? std::string("/") : request.url.substr(path_start);
  return responder_->handle(path, request.headers, request.body);
}

struct MockLlmServer::Impl {
  httplib::Server server;
  std::thread thread;
  std::string host;
};

MockLlmServer::MockLlmServer(std::shared_ptr<MockResponder> responder)
    : impl_(std::make_unique<Impl>()), responder_(std::move(responder)) {
  impl_->server.Post(R"(.*/chat/completions)", [this](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> headers;
    for (const auto& [k, v] : req.headers) {
      if (k == "Authorization" || k == "Content-Type") headers[k] = v;
    }
    try {
      const auto out = responder_->handle(req.path, headers, req.body);
      res.status = out.status;
      res.set_content(out.body, "application/json");
    } catch (const TransportError&) {
      // Closest a handler gets to dropping the connection.
      res.status = 502;
      res.set_content("", "text/plain");
    }
  });
}

MockLlmServer::~MockLlmServer() { stop(); }

int MockLlmServer::start(const std::string& host, int port) {
  impl_->host = host;
  port_ = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (port_ <= 0) throw TransportError("mock server cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port_;
}

void MockLlmServer::run(const std::string& host, int port) {
  impl_->host = host;
  port_ = port;
  if (!impl_->server.listen(host, port)) {
    throw TransportError("mock server cannot listen on " + host + ":" + std::to_string(port));
  }
}

void MockLlmServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string MockLlmServer::base_url() const {
  return "http://" + impl_->host + ":" + std::to_string(port_) + "/v1";
}

}  // namespace tutor
