#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>

#include <openssl/evp.h>

#include "chartloom/error.hpp"
#include "chartloom/gateway/backend.hpp"

namespace chartloom::gateway {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // prefix without trailing slash
};

SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("base_url needs a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

// "stop" does not say which sequence fired. For a closing-tag stop ("</x>")
// an unclosed "<x>" at the tail of the text is the tell.
std::optional<std::string> infer_stop(const std::string& text, const std::vector<std::string>& stops) {
  for (const auto& stop : stops) {
    if (stop.size() < 4 || stop.rfind("</", 0) != 0 || stop.back() != '>') continue;
    std::string open = "<" + stop.substr(2);
    auto last_open = text.rfind(open);
    if (last_open == std::string::npos) continue;
    auto last_close = text.rfind(stop);
    if (last_close == std::string::npos || last_close < last_open) return stop;
  }
  return std::nullopt;
}

}  // namespace

std::string base64_encode(const Bytes& data) {
  std::string out(4 * ((data.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(), static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

nlohmann::json HttpBackend::build_body(const CompletionRequest& request, const std::string& model_name) {
  nlohmann::json body;
  body["model"] = model_name;
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_tokens;
  if (!request.stop_sequences.empty()) body["stop"] = request.stop_sequences;

  auto& messages = body["messages"] = nlohmann::json::array();
  for (const auto& m : request.messages) {
    nlohmann::json msg{{"role", std::string(to_string(m.role))}};
    if (!m.has_image()) {
      msg["content"] = m.joined_text();
    } else {
      auto parts = nlohmann::json::array();
      for (const auto& p : m.parts) {
        if (const auto* s = std::get_if<std::string>(&p)) {
          parts.push_back({{"type", "text"}, {"text", *s}});
        } else {
          const auto& img = std::get<Image>(p);
          parts.push_back({{"type", "image_url"},
                           {"image_url", {{"url", "data:" + img.mime + ";base64," + base64_encode(*img.bytes)}}}});
        }
      }
      msg["content"] = std::move(parts);
    }
    messages.push_back(std::move(msg));
  }
  return body;
}

RawReply HttpBackend::parse_body(const nlohmann::json& body, const CompletionRequest& request) {
  const auto& choices = body.at("choices");
  if (!choices.is_array() || choices.empty()) throw GatewayError(GatewayError::Kind::transport, "response has no choices");
  const auto& choice = choices.at(0);

  RawReply reply;
  const auto& content = choice.at("message").at("content");
  reply.text = content.is_string() ? content.get<std::string>() : std::string{};

  auto finish = choice.value("finish_reason", std::string{"stop"});
  if (finish == "length") {
    reply.finish = FinishReason::length();
  } else if (choice.contains("stop_reason") && choice.at("stop_reason").is_string()) {
    reply.finish = FinishReason::stop(choice.at("stop_reason").get<std::string>());
  } else if (auto seq = infer_stop(reply.text, request.stop_sequences)) {
    reply.finish = FinishReason::stop(*seq);
  } else {
    reply.finish = FinishReason::natural();
  }

  if (body.contains("usage") && body.at("usage").is_object()) {
    reply.usage.prompt_tokens = body.at("usage").value("prompt_tokens", 0);
    reply.usage.completion_tokens = body.at("usage").value("completion_tokens", 0);
  }
  return reply;
}

RawReply HttpBackend::send(const CompletionRequest& request, const Endpoint& endpoint) {
  auto url = split_url(endpoint.base_url);
  httplib::Client client(url.origin);
  client.set_connection_timeout(timeout_s_, 0);
  client.set_read_timeout(timeout_s_, 0);
  client.set_write_timeout(timeout_s_, 0);

  httplib::Headers headers;
  if (!endpoint.api_key_env.empty()) {
    if (const char* key = std::getenv(endpoint.api_key_env.c_str()); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }

  const auto body = build_body(request, endpoint.model_name).dump();
  auto res = client.Post(url.path + "/chat/completions", headers, body, "application/json");
  if (!res) {
    throw GatewayError(GatewayError::Kind::transport, "HTTP transport error: " + httplib::to_string(res.error()));
  }
  if (res->status == 429) throw GatewayError(GatewayError::Kind::rate_limit, "HTTP 429: " + res->body.substr(0, 200));
  if (res->status >= 500) {
    throw GatewayError(GatewayError::Kind::transport, "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
  }
  if (res->status >= 400) {
    throw GatewayError(GatewayError::Kind::request, "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
  }
  try {
    return parse_body(nlohmann::json::parse(res->body), request);
  } catch (const nlohmann::json::exception& e) {
    throw GatewayError(GatewayError::Kind::transport, std::string("malformed completion body: ") + e.what());
  }
}

}  // namespace chartloom::gateway
