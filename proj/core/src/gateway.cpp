#include "tutor/gateway.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "embedded_data.hpp"
#include "tutor/errors.hpp"

namespace tutor {

using nlohmann::json;

namespace {

constexpr std::string_view kRoleNames[] = {"system", "user", "assistant", "tool"};

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("URL without scheme: " + url);
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw ConfigError("unsupported URL scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

bool retryable_status(int status) { return status == 429 || (status >= 500 && status <= 599); }

}  // namespace

std::string_view to_string(Role role) { return kRoleNames[static_cast<std::size_t>(role)]; }

std::optional<Role> parse_role(std::string_view text) {
  for (std::size_t i = 0; i < std::size(kRoleNames); ++i) {
    if (kRoleNames[i] == text) return static_cast<Role>(i);
  }
  return std::nullopt;
}

void to_json(json& j, const ChatMessage& m) {
  j = json{{"role", to_string(m.role)}, {"content", m.content}};
}

void from_json(const json& j, ChatMessage& m) {
  const auto role = parse_role(j.at("role").get<std::string>());
  if (!role) throw ProtocolError("unknown message role " + j.at("role").dump());
  m.role = *role;
  const auto& content = j.at("content");
  m.content = content.is_null() ? std::string() : content.get<std::string>();
}

void to_json(json& j, const ProviderConfig& c) {
  j = json{{"name", c.name},
           {"base_url", c.base_url},
           {"model", c.model},
           {"api_key_env", c.api_key_env},
           {"timeout_ms", c.timeout.count()},
           {"max_retries", c.max_retries},
           {"backoff_initial_ms", c.backoff_initial.count()}};
}

void from_json(const json& j, ProviderConfig& c) {
  const ProviderConfig defaults;
  c.name = j.at("name").get<std::string>();
  c.base_url = j.at("base_url").get<std::string>();
  c.model = j.at("model").get<std::string>();
  c.api_key_env = j.value("api_key_env", "");
  c.timeout = std::chrono::milliseconds(j.value("timeout_ms", defaults.timeout.count()));
  c.max_retries = j.value("max_retries", defaults.max_retries);
  c.backoff_initial =
      std::chrono::milliseconds(j.value("backoff_initial_ms", defaults.backoff_initial.count()));
  if (c.max_retries < 0) throw ConfigError("provider " + c.name + ": negative max_retries");
}

const std::vector<ProviderConfig>& shipped_providers() {
  static const std::vector<ProviderConfig> providers =
      json::parse(detail::embedded_file("providers.json")).get<std::vector<ProviderConfig>>();
  return providers;
}

const ProviderConfig& find_provider(const std::vector<ProviderConfig>& providers, std::string_view name) {
  for (const auto& p : providers) {
    if (p.name == name) return p;
  }
  throw ConfigError("unknown provider: " + std::string(name));
}

HttpResponse HttplibTransport::post(const HttpRequest& request) {
  const auto url = split_url(request.url);
  httplib::Client client(url.origin);
  const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
  const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(request.timeout - seconds);
  client.set_connection_timeout(seconds.count(), micros.count());
  client.set_read_timeout(seconds.count(), micros.count());
  client.set_write_timeout(seconds.count(), micros.count());

  httplib::Headers headers;
  std::string content_type = "application/json";
  for (const auto& [k, v] : request.headers) {
    if (k == "Content-Type") {
      content_type = v;
    } else {
      headers.emplace(k, v);
    }
  }
  auto result = client.Post(url.path, headers, request.body, content_type);
  if (!result) {
    throw TransportError("request to " + url.origin + " failed: " + httplib::to_string(result.error()));
  }
  return {result->status, result->body};
}

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str()); v != nullptr && *v != '\0') return std::string(v);
  return std::nullopt;
}

json build_request_body(const ProviderConfig& config, std::span<const ChatMessage> messages) {
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back(m);
  return json{{"model", config.model}, {"messages", std::move(msgs)}};
}

ChatMessage parse_completion(std::string_view body) {
  try {
    const auto doc = json::parse(body);
    auto message = doc.at("choices").at(0).at("message").get<ChatMessage>();
    if (message.role != Role::assistant) throw ProtocolError("first choice is not an assistant message");
    return message;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed chat completion response: ") + e.what());
  }
}

ChatClient::ChatClient(std::shared_ptr<HttpTransport> transport, Sleeper sleeper, EnvLookup env)
    : transport_(std::move(transport)), sleeper_(std::move(sleeper)), env_(std::move(env)) {
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

Completion ChatClient::complete(const ProviderConfig& config, std::span<const ChatMessage> messages) const {
  if (messages.empty()) throw PreconditionError("chat completion needs at least one message");

  HttpRequest request;
  std::string base = config.base_url;
  while (!base.empty() && base.back() == '/') base.pop_back();
  request.url = base + "/chat/completions";
  request.timeout = config.timeout;
  request.headers["Content-Type"] = "application/json";
  if (!config.api_key_env.empty()) {
    const auto key = env_(config.api_key_env);
    if (!key) {
      throw ConfigError("provider " + config.name + " needs an API key in $" + config.api_key_env);
    }
    request.headers["Authorization"] = "Bearer " + *key;
  }
  request.body = build_request_body(config, messages).dump();

  std::string last_failure;
  const int attempts = 1 + config.max_retries;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    if (attempt > 1) sleeper_(config.backoff_initial * (1LL << (attempt - 2)));
    HttpResponse response;
    try {
      response = transport_->post(request);
    } catch (const TransportError& e) {
      last_failure = e.what();
      continue;
    }
    if (response.status >= 200 && response.status < 300) {
      return {parse_completion(response.body), attempt};
    }
    last_failure = "HTTP " + std::to_string(response.status) + " from provider " + config.name;
    if (!retryable_status(response.status)) throw TransportError(last_failure);
  }
  throw TransportError("provider " + config.name + " unavailable after " + std::to_string(attempts) +
                       " attempts: " + last_failure);
}

ChatMessage chat_complete(const ProviderConfig& config, std::span<const ChatMessage> messages) {
  static const ChatClient client;
  return client.complete(config, messages).message;
}

}  // namespace tutor
