#pragma once

#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chartloom/gateway/types.hpp"

namespace chartloom::gateway {

struct CallRecord {
  ModelRole model_role = ModelRole::writer_text;
  std::string template_id;
  std::string request_hash;
  std::string response_text;
  Usage usage;
  double latency_ms = 0;
  bool ok = true;
  std::string error;  // empty when ok
};

nlohmann::json to_json(const CallRecord& record);

// Every backend attempt becomes one record, so retries show up as calls.
// Internally synchronized; counters never decrease.
class UsageLedger {
public:
  void record(CallRecord record);

  std::size_t api_calls() const;
  double total_latency_ms() const;
  std::vector<CallRecord> snapshot() const;
  // Calls whose template id equals `template_id`, or starts with it when it ends in '.'.
  std::size_t count(std::string_view template_id) const;

  // One JSON object per record.
  void write_transcript(const std::filesystem::path& path) const;

private:
  mutable std::mutex mutex_;
  std::vector<CallRecord> records_;
  double total_latency_ms_ = 0;
};

}  // namespace chartloom::gateway
