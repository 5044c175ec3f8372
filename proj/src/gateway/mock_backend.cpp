#include <sstream>

#include "chartloom/error.hpp"
#include "chartloom/gateway/backend.hpp"
#include "chartloom/util/strings.hpp"

namespace chartloom::gateway {

namespace {

std::int64_t word_count(std::string_view s) {
  std::istringstream in{std::string(s)};
  std::int64_t n = 0;
  std::string w;
  while (in >> w) ++n;
  return n;
}

MockBackend::Reply parse_reply(const nlohmann::json& j) {
  MockBackend::Reply reply;
  if (j.is_string()) {
    reply.text = j.get<std::string>();
    return reply;
  }
  if (!j.is_object()) throw ParseError("mock reply must be a string or object");
  if (j.contains("error")) {
    auto kind = j.at("error").get<std::string>();
    if (kind == "transport") reply.error = GatewayError::Kind::transport;
    else if (kind == "rate_limit") reply.error = GatewayError::Kind::rate_limit;
    else if (kind == "request") reply.error = GatewayError::Kind::request;
    else throw ParseError("unknown mock error kind '" + kind + "'");
  }
  reply.text = j.value("text", "");
  reply.length_limit = j.value("finish", "") == "length";
  return reply;
}

}  // namespace

std::unique_ptr<MockBackend> MockBackend::from_json(const nlohmann::json& script) {
  auto mock = std::make_unique<MockBackend>();
  if (!script.contains("replies") || !script.at("replies").is_object()) {
    throw ParseError("mock script needs a \"replies\" object");
  }
  for (const auto& [channel, list] : script.at("replies").items()) {
    if (!list.is_array()) throw ParseError("mock channel '" + channel + "' must be an array");
    for (const auto& entry : list) mock->push(channel, parse_reply(entry));
  }
  return mock;
}

std::unique_ptr<MockBackend> MockBackend::from_file(const std::filesystem::path& path) {
  try {
    return from_json(nlohmann::json::parse(util::read_file(path.string())));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("mock script " + path.string() + ": " + e.what());
  }
}

void MockBackend::push(const std::string& channel, std::string text) { push(channel, Reply{std::move(text), {}, false}); }

void MockBackend::push(const std::string& channel, Reply reply) {
  std::lock_guard lock(mutex_);
  queues_[channel].push_back(std::move(reply));
}

RawReply MockBackend::send(const CompletionRequest& request, const Endpoint&) {
  std::lock_guard lock(mutex_);
  received_.push_back(request);

  std::deque<Reply>* queue = nullptr;
  auto pick = [&](const std::string& channel) {
    auto it = queues_.find(channel);
    if (!queue && it != queues_.end() && !it->second.empty()) queue = &it->second;
  };
  pick(request.template_id);
  pick(request.template_id.substr(0, request.template_id.find('.')));
  pick("*");
  if (!queue) {
    throw GatewayError(GatewayError::Kind::exhausted, "mock exhausted: no scripted reply for '" + request.template_id + "'");
  }

  Reply reply = std::move(queue->front());
  queue->pop_front();
  if (reply.error) throw GatewayError(*reply.error, "scripted " + std::string(to_string(*reply.error)) + " failure");

  std::int64_t prompt_words = 0;
  for (const auto& m : request.messages) prompt_words += word_count(m.joined_text());
  RawReply raw;
  raw.usage = {prompt_words, word_count(reply.text)};
  raw.finish = reply.length_limit ? FinishReason::length() : FinishReason::natural();
  raw.text = std::move(reply.text);
  return raw;
}

std::vector<CompletionRequest> MockBackend::received() const {
  std::lock_guard lock(mutex_);
  return received_;
}

std::size_t MockBackend::remaining(const std::string& channel) const {
  std::lock_guard lock(mutex_);
  auto it = queues_.find(channel);
  return it == queues_.end() ? 0 : it->second.size();
}

}  // namespace chartloom::gateway
