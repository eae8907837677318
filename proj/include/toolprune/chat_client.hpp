#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <vector>

namespace toolprune {

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
};

// Minimal chat-completion client interface so pruning and labeling can be
// driven by a fake in tests.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  // Returns choices[0].message.content. Throws EndpointError on failure.
  virtual std::string complete(const ChatRequest& request) = 0;
};

struct HttpChatOptions {
  std::string endpoint;  // base URL or full chat-completions URL
  std::string api_key;   // empty: no Authorization header
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{250};
  std::chrono::seconds timeout{120};
};

// OpenAI-compatible chat-completions transport. Transport errors and 5xx
// responses retry with exponential backoff; 4xx responses fail immediately
// since retrying a rejected request cannot help.
class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(HttpChatOptions options);
  ~HttpChatClient() override;

  std::string complete(const ChatRequest& request) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace toolprune
