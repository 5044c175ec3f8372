#include "chartloom/gateway/types.hpp"

namespace chartloom::gateway {

std::string_view to_string(ModelRole role) {
  switch (role) {
    case ModelRole::writer_text: return "writer_text";
    case ModelRole::analysis_text: return "analysis_text";
    case ModelRole::vision: return "vision";
  }
  return "writer_text";
}

std::string_view to_string(MessageRole role) {
  switch (role) {
    case MessageRole::system: return "system";
    case MessageRole::user: return "user";
    case MessageRole::assistant: return "assistant";
    case MessageRole::tool: return "tool";
  }
  return "user";
}

std::optional<ModelRole> parse_model_role(std::string_view name) {
  if (name == "writer_text") return ModelRole::writer_text;
  if (name == "analysis_text") return ModelRole::analysis_text;
  if (name == "vision") return ModelRole::vision;
  return std::nullopt;
}

bool Message::has_image() const {
  for (const auto& p : parts) {
    if (std::holds_alternative<Image>(p)) return true;
  }
  return false;
}

std::string Message::joined_text() const {
  std::string out;
  for (const auto& p : parts) {
    if (const auto* s = std::get_if<std::string>(&p)) out += *s;
  }
  return out;
}

std::string to_string(const FinishReason& reason) {
  switch (reason.kind) {
    case FinishReason::Kind::stop_sequence: return "stop_sequence(" + reason.sequence + ")";
    case FinishReason::Kind::natural_end: return "natural_end";
    case FinishReason::Kind::length_limit: return "length_limit";
  }
  return "natural_end";
}

std::string_view to_string(GatewayError::Kind kind) {
  switch (kind) {
    case GatewayError::Kind::transport: return "transport";
    case GatewayError::Kind::rate_limit: return "rate_limit";
    case GatewayError::Kind::request: return "request";
    case GatewayError::Kind::exhausted: return "exhausted";
    case GatewayError::Kind::unavailable: return "unavailable";
  }
  return "transport";
}

}  // namespace chartloom::gateway
