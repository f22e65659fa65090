#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "tutor/orchestrator.hpp"

namespace tutor {

enum class ApiErrorCode { bad_request, not_found, provider_unavailable, internal };

std::string_view to_string(ApiErrorCode code);

// Error body sent to clients. Messages come from our own exception texts; provider keys
// are never part of them and unexpected failures are reported without detail.
struct ApiError {
  ApiErrorCode code = ApiErrorCode::internal;
  std::string message;
  std::optional<int> retry_after_seconds;
};

void to_json(nlohmann::json& j, const ApiError& e);

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
  std::map<std::string, std::string> headers;
};

// The published request/response schemas (JSON Schema 2020-12).
const nlohmann::json& api_schemas();

// Transport-free request handling; ApiServer maps HTTP routes onto these.
class ApiHandler {
public:
  static constexpr int kProviderRetryAfterSeconds = 5;

  explicit ApiHandler(Engine& engine) : engine_(engine) {}

  ApiResponse create_session(const std::string& body);
  ApiResponse close_session(const std::string& session_id);
  ApiResponse post_message(const std::string& session_id, const std::string& body);
  ApiResponse session_prompt(const std::string& session_id);
  ApiResponse learner_profile(const std::string& student_id);
  ApiResponse learner_assessment(const std::string& student_id);
  ApiResponse health();

  // Converts the exception in flight into an error response.
  static ApiResponse error_response();

private:
  Engine& engine_;
};

class ApiServer {
public:
  explicit ApiServer(Engine& engine);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  // Binds (loopback by default) and serves on a background thread; port 0 picks a free port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  // Blocks until stop() is called from elsewhere.
  void run(const std::string& host, int port);
  void stop();
  int port() const noexcept { return port_; }

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

}  // namespace tutor
