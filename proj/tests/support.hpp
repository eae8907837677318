#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "toolprune/chat_client.hpp"
#include "toolprune/error.hpp"

namespace testsupport {

// Scripted chat client: replays canned responses in order and records every
// request it saw. Running out of responses throws EndpointError, as does any
// turn marked fail.
class FakeChatClient : public toolprune::ChatClient {
 public:
  struct Turn {
    std::string content;
    bool fail = false;
  };

  FakeChatClient() = default;
  explicit FakeChatClient(std::vector<std::string> responses) {
    for (std::string& r : responses) turns.push_back({std::move(r), false});
  }

  void push(std::string content) { turns.push_back({std::move(content), false}); }
  void push_failure() { turns.push_back({"", true}); }

  std::string complete(const toolprune::ChatRequest& request) override {
    requests.push_back(request);
    if (cursor >= turns.size()) {
      throw toolprune::EndpointError("fake chat client has no more responses");
    }
    const Turn& turn = turns[cursor++];
    if (turn.fail) throw toolprune::EndpointError("scripted endpoint failure");
    return turn.content;
  }

  std::vector<Turn> turns;
  std::vector<toolprune::ChatRequest> requests;
  std::size_t cursor = 0;
};

// Unique directory under the system temp root, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto base = std::filesystem::temp_directory_path();
    for (int attempt = 0; attempt < 1000; ++attempt) {
      auto candidate =
          base / ("toolprune-test-" + std::to_string(counter.fetch_add(1)) + "-" +
                  std::to_string(attempt));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
    throw std::runtime_error("cannot create temp directory");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path file(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace testsupport
