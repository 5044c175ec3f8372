#include "chartloom/gateway/gateway.hpp"

#include <thread>

#include <spdlog/spdlog.h>

namespace chartloom::gateway {

namespace {

bool retryable(GatewayError::Kind kind) {
  return kind == GatewayError::Kind::transport || kind == GatewayError::Kind::rate_limit;
}

}  // namespace

Truncation truncate_at_stop(std::string_view text, const std::vector<std::string>& stops) {
  std::size_t best = std::string_view::npos;
  const std::string* matched = nullptr;
  for (const auto& stop : stops) {
    if (stop.empty()) continue;
    auto pos = text.find(stop);
    if (pos == std::string_view::npos) continue;
    if (pos < best || (pos == best && stop.size() > matched->size())) {
      best = pos;
      matched = &stop;
    }
  }
  if (!matched) return {std::string(text), std::nullopt};
  return {std::string(text.substr(0, best)), *matched};
}

std::string request_hash(const CompletionRequest& request) {
  nlohmann::json j;
  j["role"] = std::string(to_string(request.model_role));
  j["template_id"] = request.template_id;
  j["stop"] = request.stop_sequences;
  j["temperature"] = request.temperature;
  j["max_tokens"] = request.max_tokens;
  auto& messages = j["messages"] = nlohmann::json::array();
  for (const auto& m : request.messages) {
    nlohmann::json parts = nlohmann::json::array();
    for (const auto& p : m.parts) {
      if (const auto* s = std::get_if<std::string>(&p)) {
        parts.push_back(*s);
      } else {
        const auto& img = std::get<Image>(p);
        parts.push_back({{"image_sha256", img.empty() ? "" : sha256_hex({reinterpret_cast<const char*>(img.bytes->data()),
                                                                         img.bytes->size()})}});
      }
    }
    messages.push_back({{"role", std::string(to_string(m.role))}, {"parts", parts}});
  }
  return sha256_hex(j.dump());
}

Gateway::Gateway(std::unique_ptr<Backend> backend, RetryPolicy retry)
    : backend_(std::move(backend)), retry_(retry), sleeper_([](std::chrono::milliseconds d) {
        std::this_thread::sleep_for(d);
      }) {
  if (!backend_) throw PreconditionError("gateway needs a backend");
  if (retry_.attempts < 1) retry_.attempts = 1;
}

void Gateway::configure(ModelRole role, RoleConfig config) {
  if (role == ModelRole::vision) config.multimodal = true;
  roles_[role] = std::move(config);
}

bool Gateway::available(ModelRole role) const {
  auto it = roles_.find(role);
  return it != roles_.end() && it->second.enabled;
}

bool Gateway::multimodal(ModelRole role) const {
  auto it = roles_.find(role);
  return it != roles_.end() && it->second.multimodal;
}

void Gateway::validate(const CompletionRequest& request) const {
  if (request.messages.empty()) throw PreconditionError("completion request has no messages");
  if (request.stop_sequences.size() > kMaxStopSequences) {
    throw PreconditionError("at most " + std::to_string(kMaxStopSequences) + " stop sequences are allowed");
  }
  if (request.temperature < 0) throw PreconditionError("temperature must be >= 0");
  if (request.max_tokens <= 0) throw PreconditionError("max_tokens must be positive");
  for (const auto& m : request.messages) {
    if (m.parts.empty()) throw PreconditionError("message without content parts");
    for (const auto& p : m.parts) {
      if (const auto* img = std::get_if<Image>(&p); img && img->empty()) {
        throw PreconditionError("empty image part");
      }
    }
    if (m.has_image() && !multimodal(request.model_role)) {
      throw PreconditionError("image part sent to non-multimodal role " +
                              std::string(to_string(request.model_role)));
    }
  }
  if (!available(request.model_role)) {
    throw GatewayError(GatewayError::Kind::unavailable,
                       "model role " + std::string(to_string(request.model_role)) + " is not available");
  }
}

CompletionResult Gateway::complete(const CompletionRequest& original) {
  const auto& role = roles_.count(original.model_role) ? roles_.at(original.model_role) : RoleConfig{};
  CompletionRequest request = original;
  if (role.temperature) request.temperature = *role.temperature;
  validate(request);
  const auto& endpoint = roles_.at(request.model_role).endpoint;
  const auto hash = request_hash(request);

  for (int attempt = 1;; ++attempt) {
    const auto started = std::chrono::steady_clock::now();
    CallRecord record{request.model_role, request.template_id, hash, {}, {}, 0, true, {}};
    try {
      RawReply reply = backend_->send(request, endpoint);
      record.latency_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();

      auto cut = truncate_at_stop(reply.text, request.stop_sequences);
      CompletionResult result;
      result.text = std::move(cut.text);
      result.finish = cut.matched ? FinishReason::stop(*cut.matched) : reply.finish;
      result.usage = reply.usage;
      result.latency_ms = record.latency_ms;

      record.response_text = result.text;
      record.usage = result.usage;
      ledger_.record(std::move(record));
      return result;
    } catch (const GatewayError& e) {
      record.latency_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
      record.ok = false;
      record.error = std::string(to_string(e.kind())) + ": " + e.what();
      ledger_.record(std::move(record));
      if (!retryable(e.kind()) || attempt >= retry_.attempts) throw;
      auto backoff = retry_.base_backoff * (1 << (attempt - 1));
      spdlog::warn("{} call failed ({}), retry {}/{} in {} ms", request.template_id, e.what(), attempt,
                   retry_.attempts - 1, backoff.count());
      sleeper_(backoff);
    }
  }
}

CompletionResult Gateway::complete_multimodal(const CompletionRequest& request) {
  if (request.model_role != ModelRole::vision) {
    throw PreconditionError("multimodal completion requires the vision role");
  }
  return complete(request);
}

}  // namespace chartloom::gateway
