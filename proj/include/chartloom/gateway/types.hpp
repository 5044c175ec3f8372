#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "chartloom/error.hpp"

namespace chartloom::gateway {

enum class ModelRole { writer_text, analysis_text, vision };
enum class MessageRole { system, user, assistant, tool };

std::string_view to_string(ModelRole role);
std::string_view to_string(MessageRole role);
std::optional<ModelRole> parse_model_role(std::string_view name);

using Bytes = std::vector<std::uint8_t>;

// Shared so a figure can sit in several messages (history, selection) without copies.
struct Image {
  std::shared_ptr<const Bytes> bytes;
  std::string mime = "image/png";

  static Image png(Bytes data) { return {std::make_shared<const Bytes>(std::move(data)), "image/png"}; }
  bool empty() const { return !bytes || bytes->empty(); }
};

using ContentPart = std::variant<std::string, Image>;

struct Message {
  MessageRole role = MessageRole::user;
  std::vector<ContentPart> parts;

  static Message text(MessageRole role, std::string body) { return {role, {std::move(body)}}; }
  bool has_image() const;
  // Concatenated text parts.
  std::string joined_text() const;
};

inline constexpr std::size_t kMaxStopSequences = 4;

struct CompletionRequest {
  ModelRole model_role = ModelRole::writer_text;
  // Which prompt produced this request; drives mock routing and the transcript.
  std::string template_id;
  std::vector<Message> messages;
  std::vector<std::string> stop_sequences;
  double temperature = 0.0;
  int max_tokens = 4096;
};

struct FinishReason {
  enum class Kind { stop_sequence, natural_end, length_limit };
  Kind kind = Kind::natural_end;
  std::string sequence;  // set for stop_sequence

  static FinishReason stop(std::string seq) { return {Kind::stop_sequence, std::move(seq)}; }
  static FinishReason natural() { return {Kind::natural_end, {}}; }
  static FinishReason length() { return {Kind::length_limit, {}}; }
  bool operator==(const FinishReason&) const = default;
};

std::string to_string(const FinishReason& reason);

struct Usage {
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

struct CompletionResult {
  std::string text;
  FinishReason finish;
  Usage usage;
  double latency_ms = 0;
};

class GatewayError : public Error {
public:
  enum class Kind {
    transport,    // network failure or 5xx, retries exhausted
    rate_limit,   // 429, retries exhausted
    request,      // other 4xx, never retried
    exhausted,    // mock backend has no scripted reply left
    unavailable,  // role not configured or disabled
  };

  GatewayError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

std::string_view to_string(GatewayError::Kind kind);

}  // namespace chartloom::gateway
