#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>

#include "chartloom/gateway/backend.hpp"
#include "chartloom/gateway/ledger.hpp"
#include "chartloom/gateway/types.hpp"

namespace chartloom::gateway {

struct RoleConfig {
  Endpoint endpoint;
  bool multimodal = false;
  bool enabled = true;
  // Overrides the temperature of every request sent to this role.
  std::optional<double> temperature;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds base_backoff{1000};  // doubles per retry: 1s, 2s, 4s
};

// Uniform entry point for every model call in the pipeline. Shareable across
// threads: the ledger is synchronized and backends guard their own state.
class Gateway {
public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit Gateway(std::unique_ptr<Backend> backend, RetryPolicy retry = {});

  void configure(ModelRole role, RoleConfig config);
  // True when the role is configured and enabled.
  bool available(ModelRole role) const;
  bool multimodal(ModelRole role) const;

  // Text-only request. Output is truncated at the earliest stop sequence.
  CompletionResult complete(const CompletionRequest& request);
  // Same contract; requires the vision role.
  CompletionResult complete_multimodal(const CompletionRequest& request);

  UsageLedger& ledger() { return ledger_; }
  const UsageLedger& ledger() const { return ledger_; }
  Backend& backend() { return *backend_; }
  void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }

private:
  void validate(const CompletionRequest& request) const;

  std::unique_ptr<Backend> backend_;
  RetryPolicy retry_;
  std::map<ModelRole, RoleConfig> roles_;
  UsageLedger ledger_;
  Sleeper sleeper_;
};

// Earliest occurrence of any stop sequence wins; ties go to the longer one.
struct Truncation {
  std::string text;
  std::optional<std::string> matched;
};
Truncation truncate_at_stop(std::string_view text, const std::vector<std::string>& stops);

std::string request_hash(const CompletionRequest& request);

}  // namespace chartloom::gateway
