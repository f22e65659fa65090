#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace tutor {

enum class Role { system, user, assistant, tool };

std::string_view to_string(Role role);
std::optional<Role> parse_role(std::string_view text);

struct ChatMessage {
  Role role = Role::user;
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

void to_json(nlohmann::json& j, const ChatMessage& m);
void from_json(const nlohmann::json& j, ChatMessage& m);

// Providers differ only by these fields; there is no per-provider code.
struct ProviderConfig {
  std::string name;
  std::string base_url;  // e.g. https://api.example.com/v1
  std::string model;
  std::string api_key_env;  // empty: no key needed (local servers)
  std::chrono::milliseconds timeout{30'000};
  int max_retries = 2;
  std::chrono::milliseconds backoff_initial{500};
};

void to_json(nlohmann::json& j, const ProviderConfig& c);
void from_json(const nlohmann::json& j, ProviderConfig& c);

// The seven shipped providers followed by the local "mock" provider.
const std::vector<ProviderConfig>& shipped_providers();
// Throws ConfigError for an unknown name.
const ProviderConfig& find_provider(const std::vector<ProviderConfig>& providers, std::string_view name);

struct HttpRequest {
  std::string url;
  std::map<std::string, std::string> headers;
  std::string body;
  std::chrono::milliseconds timeout{30'000};
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

// One POST. Throws TransportError when no HTTP response arrives (refused, reset, timeout).
class HttpTransport {
public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

class HttplibTransport final : public HttpTransport {
public:
  HttpResponse post(const HttpRequest& request) override;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

std::optional<std::string> process_env(const std::string& name);

nlohmann::json build_request_body(const ProviderConfig& config, std::span<const ChatMessage> messages);
// Throws ProtocolError unless the body carries choices[0].message.content.
ChatMessage parse_completion(std::string_view body);

struct Completion {
  ChatMessage message;
  int attempts = 0;
};

// OpenAI-compatible chat completions over a pluggable transport. Retries transport
// failures, 429 and 5xx up to max_retries times with exponential backoff.
class ChatClient {
public:
  explicit ChatClient(std::shared_ptr<HttpTransport> transport = std::make_shared<HttplibTransport>(),
                      Sleeper sleeper = {}, EnvLookup env = process_env);

  Completion complete(const ProviderConfig& config, std::span<const ChatMessage> messages) const;

private:
  std::shared_ptr<HttpTransport> transport_;
  Sleeper sleeper_;
  EnvLookup env_;
};

ChatMessage chat_complete(const ProviderConfig& config, std::span<const ChatMessage> messages);

}  // namespace tutor
