#include "chartloom/gateway/ledger.hpp"

#include <fstream>

#include "chartloom/error.hpp"

namespace chartloom::gateway {

nlohmann::json to_json(const CallRecord& record) {
  nlohmann::json j;
  j["role"] = std::string(to_string(record.model_role));
  j["template_id"] = record.template_id;
  j["request_hash"] = record.request_hash;
  j["response_text"] = record.response_text;
  j["usage"] = {{"prompt_tokens", record.usage.prompt_tokens},
                {"completion_tokens", record.usage.completion_tokens}};
  j["latency_ms"] = record.latency_ms;
  j["ok"] = record.ok;
  if (!record.ok) j["error"] = record.error;
  return j;
}

void UsageLedger::record(CallRecord record) {
  std::lock_guard lock(mutex_);
  total_latency_ms_ += std::max(0.0, record.latency_ms);
  records_.push_back(std::move(record));
}

std::size_t UsageLedger::api_calls() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

double UsageLedger::total_latency_ms() const {
  std::lock_guard lock(mutex_);
  return total_latency_ms_;
}

std::vector<CallRecord> UsageLedger::snapshot() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::size_t UsageLedger::count(std::string_view template_id) const {
  std::lock_guard lock(mutex_);
  const bool prefix = !template_id.empty() && template_id.back() == '.';
  std::size_t n = 0;
  for (const auto& r : records_) {
    if (prefix ? r.template_id.starts_with(template_id) : r.template_id == template_id) ++n;
  }
  return n;
}

void UsageLedger::write_transcript(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& r : snapshot()) out << to_json(r).dump() << '\n';
}

}  // namespace chartloom::gateway
