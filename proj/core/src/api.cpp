#include "tutor/api.hpp"

#include <thread>

#include <httplib.h>

#include "embedded_data.hpp"
#include "tutor/errors.hpp"

namespace tutor {

using nlohmann::json;

namespace {

constexpr std::string_view kCodeNames[] = {"bad_request", "not_found", "provider_unavailable", "internal"};

int status_for(ApiErrorCode code) {
  switch (code) {
    case ApiErrorCode::bad_request: return 400;
    case ApiErrorCode::not_found: return 404;
    case ApiErrorCode::provider_unavailable: return 503;
    case ApiErrorCode::internal: break;
  }
  return 500;
}

ApiResponse make_error(ApiError error) {
  ApiResponse r;
  r.status = status_for(error.code);
  if (error.retry_after_seconds) r.headers["Retry-After"] = std::to_string(*error.retry_after_seconds);
  r.body = error;
  return r;
}

json parse_body(const std::string& body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception&) {
    throw PreconditionError("request body is not valid JSON");
  }
  if (!doc.is_object()) throw PreconditionError("request body must be a JSON object");
  return doc;
}

std::string required_string(const json& doc, const char* field) {
  const auto it = doc.find(field);
  if (it == doc.end() || !it->is_string()) {
    throw PreconditionError(std::string("field '") + field + "' must be a string");
  }
  return it->get<std::string>();
}

}  // namespace

std::string_view to_string(ApiErrorCode code) { return kCodeNames[static_cast<std::size_t>(code)]; }

void to_json(json& j, const ApiError& e) {
  json inner{{"code", to_string(e.code)}, {"message", e.message}};
  if (e.retry_after_seconds) inner["retry_after_seconds"] = *e.retry_after_seconds;
  j = json{{"error", std::move(inner)}};
}

const json& api_schemas() {
  static const json schemas = json::parse(detail::embedded_file("api/schemas.json"));
  return schemas;
}

ApiResponse ApiHandler::error_response() {
  try {
    throw;
  } catch (const NotFoundError& e) {
    return make_error({ApiErrorCode::not_found, e.what(), std::nullopt});
  } catch (const PreconditionError& e) {
    return make_error({ApiErrorCode::bad_request, e.what(), std::nullopt});
  } catch (const ToolError& e) {
    return make_error({ApiErrorCode::bad_request, e.what(), std::nullopt});
  } catch (const TransportError& e) {
    return make_error({ApiErrorCode::provider_unavailable, e.what(), kProviderRetryAfterSeconds});
  } catch (const ProtocolError& e) {
    return make_error({ApiErrorCode::provider_unavailable, e.what(), kProviderRetryAfterSeconds});
  } catch (const ConfigError& e) {
    // A missing API key names the variable, never its value.
    return make_error({ApiErrorCode::provider_unavailable, e.what(), kProviderRetryAfterSeconds});
  } catch (...) {
    return make_error({ApiErrorCode::internal, "internal error", std::nullopt});
  }
}

ApiResponse ApiHandler::create_session(const std::string& body) {
  try {
    const auto student_id = required_string(parse_body(body), "student_id");
    if (student_id.empty()) throw PreconditionError("student_id is empty");
    const auto id = engine_.open_session(student_id);
    const auto s = engine_.session(id);
    return {201,
            json{{"session_id", s.session_id},
                 {"student_id", s.student_id},
                 {"provider", s.provider},
                 {"started_at", to_millis(s.started_at)}},
            {}};
  } catch (...) {
    return error_response();
  }
}

ApiResponse ApiHandler::close_session(const std::string& session_id) {
  try {
    engine_.close_session(session_id);
    return {200, json{{"session_id", session_id}, {"closed", true}}, {}};
  } catch (...) {
    return error_response();
  }
}

ApiResponse ApiHandler::post_message(const std::string& session_id, const std::string& body) {
  try {
    const auto text = required_string(parse_body(body), "text");
    const auto turn = engine_.handle_turn(session_id, text);
    return {200,
            json{{"session_id", session_id},
                 {"reply", turn.reply},
                 {"subject", to_string(turn.subject)},
                 {"fired_rules", turn.strategy.fired},
                 {"strategy_block", turn.strategy.rendered},
                 {"profile_delta", turn.delta}},
            {}};
  } catch (...) {
    return error_response();
  }
}

ApiResponse ApiHandler::session_prompt(const std::string& session_id) {
  try {
    const auto s = engine_.session(session_id);
    return {200, json{{"session_id", session_id}, {"prompt", s.last_prompt}}, {}};
  } catch (...) {
    return error_response();
  }
}

ApiResponse ApiHandler::learner_profile(const std::string& student_id) {
  try {
    return {200, json(engine_.profile(student_id)), {}};
  } catch (...) {
    return error_response();
  }
}

ApiResponse ApiHandler::learner_assessment(const std::string& student_id) {
  try {
    json body = engine_.assessment(student_id);
    body["student_id"] = student_id;
    return {200, std::move(body), {}};
  } catch (...) {
    return error_response();
  }
}

ApiResponse ApiHandler::health() { return {200, json{{"status", "ok"}}, {}}; }

// --- server ----------------------------------------------------------------------------

struct ApiServer::Impl {
  explicit Impl(Engine& engine) : handler(engine) {}
  ApiHandler handler;
  httplib::Server server;
  std::thread thread;
};

namespace {

void send(httplib::Response& res, const ApiResponse& r) {
  res.status = r.status;
  for (const auto& [k, v] : r.headers) res.set_header(k, v);
  res.set_content(r.body.dump(), "application/json");
}

}  // namespace

ApiServer::ApiServer(Engine& engine) : impl_(std::make_unique<Impl>(engine)) {
  auto& h = impl_->handler;
  auto& s = impl_->server;
  s.Get("/health", [&h](const httplib::Request&, httplib::Response& res) { send(res, h.health()); });
  s.Post("/sessions", [&h](const httplib::Request& req, httplib::Response& res) {
    send(res, h.create_session(req.body));
  });
  s.Delete(R"(/sessions/([^/]+))", [&h](const httplib::Request& req, httplib::Response& res) {
    send(res, h.close_session(req.matches[1]));
  });
  s.Post(R"(/sessions/([^/]+)/messages)", [&h](const httplib::Request& req, httplib::Response& res) {
    send(res, h.post_message(req.matches[1], req.body));
  });
  s.Get(R"(/sessions/([^/]+)/prompt)", [&h](const httplib::Request& req, httplib::Response& res) {
    send(res, h.session_prompt(req.matches[1]));
  });
  s.Get(R"(/learners/([^/]+)/profile)", [&h](const httplib::Request& req, httplib::Response& res) {
    send(res, h.learner_profile(req.matches[1]));
  });
  s.Get(R"(/learners/([^/]+)/assessment)", [&h](const httplib::Request& req, httplib::Response& res) {
    send(res, h.learner_assessment(req.matches[1]));
  });
  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    const auto code = res.status == 404 ? ApiErrorCode::not_found
                      : res.status < 500 ? ApiErrorCode::bad_request
                                         : ApiErrorCode::internal;
    res.set_content(json(ApiError{code, "no such route", std::nullopt}).dump(), "application/json");
  });
  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
    send(res, make_error({ApiErrorCode::internal, "internal error", std::nullopt}));
  });
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::start(const std::string& host, int port) {
  port_ = port == 0 ? impl_->server.bind_to_any_port(host)
                    : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (port_ <= 0) throw TransportError("API server cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port_;
}

void ApiServer::run(const std::string& host, int port) {
  port_ = port;
  if (!impl_->server.listen(host, port)) {
    throw TransportError("API server cannot listen on " + host + ":" + std::to_string(port));
  }
}

void ApiServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace tutor
