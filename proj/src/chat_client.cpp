#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "toolprune/chat_client.hpp"

#include <thread>

#include "json.hpp"
#include "toolprune/error.hpp"

namespace toolprune {

namespace {

using nlohmann::json;

// Splits an endpoint URL into scheme://host[:port] and a request path.
// A bare base gets the conventional /v1/chat/completions; a path that already
// names chat/completions is used verbatim; any other path gets
// /chat/completions appended.
struct EndpointParts {
  std::string base;
  std::string path;
};

EndpointParts resolve_endpoint(const std::string& endpoint) {
  std::size_t scheme = endpoint.find("://");
  std::size_t path_start =
      endpoint.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  EndpointParts parts;
  if (path_start == std::string::npos) {
    parts.base = endpoint;
    parts.path = "/v1/chat/completions";
    return parts;
  }
  parts.base = endpoint.substr(0, path_start);
  std::string path = endpoint.substr(path_start);
  while (path.size() > 1 && path.back() == '/') path.pop_back();
  if (path == "/") {
    parts.path = "/v1/chat/completions";
  } else if (path.find("chat/completions") != std::string::npos) {
    parts.path = path;
  } else {
    parts.path = path + "/chat/completions";
  }
  return parts;
}

}  // namespace

struct HttpChatClient::Impl {
  HttpChatOptions options;
  EndpointParts endpoint;
};

HttpChatClient::HttpChatClient(HttpChatOptions options) : impl_(new Impl) {
  if (options.endpoint.empty()) throw InvalidArgument("endpoint URL is empty");
  if (options.max_attempts < 1) throw InvalidArgument("max_attempts must be >= 1");
  impl_->endpoint = resolve_endpoint(options.endpoint);
  impl_->options = std::move(options);
}

HttpChatClient::~HttpChatClient() = default;

std::string HttpChatClient::complete(const ChatRequest& request) {
  json body;
  body["model"] = request.model;
  body["temperature"] = request.temperature;
  body["messages"] = json::array();
  for (const ChatMessage& m : request.messages) {
    body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  }
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!impl_->options.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + impl_->options.api_key);
  }

  std::string last_failure;
  for (int attempt = 0; attempt < impl_->options.max_attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(impl_->options.initial_backoff * (1 << (attempt - 1)));
    }
    // A fresh connection per call keeps complete() safe to invoke from many
    // threads over one client object.
    httplib::Client http(impl_->endpoint.base);
    http.set_connection_timeout(impl_->options.timeout);
    http.set_read_timeout(impl_->options.timeout);
    http.set_write_timeout(impl_->options.timeout);

    auto res = http.Post(impl_->endpoint.path, headers, payload, "application/json");
    if (!res) {
      last_failure = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_failure = "server error " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw EndpointError("endpoint rejected request with status " +
                          std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    json parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_discarded()) {
      throw EndpointError("malformed response JSON: " + res->body.substr(0, 200));
    }
    if (!parsed.contains("choices") || !parsed["choices"].is_array() ||
        parsed["choices"].empty()) {
      throw EndpointError("response has no choices: " + res->body.substr(0, 200));
    }
    const json& message = parsed["choices"][0].value("message", json::object());
    if (!message.contains("content") || !message["content"].is_string()) {
      throw EndpointError("response has no message content: " + res->body.substr(0, 200));
    }
    return message["content"].get<std::string>();
  }
  throw EndpointError("chat endpoint failed after " +
                      std::to_string(impl_->options.max_attempts) + " attempts; last: " +
                      last_failure);
}

}  // namespace toolprune
