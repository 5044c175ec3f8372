#pragma once

#include <deque>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chartloom/gateway/types.hpp"

namespace chartloom::gateway {

struct Endpoint {
  std::string base_url;
  std::string model_name;
  std::string api_key_env;  // name of the environment variable holding the key
};

// What a backend hands back before the gateway applies stop truncation.
struct RawReply {
  std::string text;
  FinishReason finish;
  Usage usage;
};

class Backend {
public:
  virtual ~Backend() = default;
  // Throws GatewayError with kind transport/rate_limit (retryable) or
  // request/exhausted (final).
  virtual RawReply send(const CompletionRequest& request, const Endpoint& endpoint) = 0;
};

// Scripted replies for offline runs. One FIFO queue per channel; a request is
// served from the queue named by its template id, then by the id's prefix
// before the first '.', then by "*".
//
// Script file format:
//   {"replies": {"<channel>": [ "<text>" | {"text": "...", "finish": "length"}
//                               | {"error": "transport"|"rate_limit"|"request"} ]}}
class MockBackend final : public Backend {
public:
  struct Reply {
    std::string text;
    std::optional<GatewayError::Kind> error;
    bool length_limit = false;
  };

  MockBackend() = default;
  static std::unique_ptr<MockBackend> from_json(const nlohmann::json& script);
  static std::unique_ptr<MockBackend> from_file(const std::filesystem::path& path);

  void push(const std::string& channel, std::string text);
  void push(const std::string& channel, Reply reply);

  RawReply send(const CompletionRequest& request, const Endpoint& endpoint) override;

  // Requests served so far, in arrival order.
  std::vector<CompletionRequest> received() const;
  std::size_t remaining(const std::string& channel) const;

private:
  mutable std::mutex mutex_;
  std::map<std::string, std::deque<Reply>> queues_;
  std::vector<CompletionRequest> received_;
};

// OpenAI-compatible chat-completions over HTTP(S).
class HttpBackend final : public Backend {
public:
  explicit HttpBackend(int timeout_s = 120) : timeout_s_(timeout_s) {}
  RawReply send(const CompletionRequest& request, const Endpoint& endpoint) override;

  // Exposed for tests.
  static nlohmann::json build_body(const CompletionRequest& request, const std::string& model_name);
  static RawReply parse_body(const nlohmann::json& body, const CompletionRequest& request);

private:
  int timeout_s_;
};

std::string base64_encode(const Bytes& data);
std::string sha256_hex(std::string_view data);

}  // namespace chartloom::gateway
