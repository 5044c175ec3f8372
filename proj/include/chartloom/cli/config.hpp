#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "chartloom/gateway/gateway.hpp"
#include "chartloom/viz/renderer.hpp"
#include "chartloom/writer/writer.hpp"

namespace chartloom::cli {

struct ModelConfig {
  std::string base_url;
  std::string model_name;
  std::string api_key_env;
  bool multimodal = false;
  bool enabled = true;
};

// One JSON file drives a run. Relative paths resolve against the file's directory.
struct RunConfig {
  std::map<gateway::ModelRole, ModelConfig> models;
  std::string backend = "mock";    // mock | http
  nlohmann::json mock_script;      // inline script, or loaded from the "mock_script" path
  double temperature = 0.0;
  int max_steps = writer::kDefaultMaxSteps;
  int n_retry = 3;
  int n_refine = 2;
  bool selection = true;
  int retry_attempts = 3;
  int backoff_ms = 1000;
  int http_timeout_s = 120;
  std::string renderer = "mock";  // mock | sandbox
  std::string sandbox_cmd;
  nlohmann::json mock_renderer = nlohmann::json::object();
  int timeout_s = 60;
  bool keep_candidates = false;
  std::uint64_t seed = 0;
  std::size_t sample_rows = ingest::kDefaultSampleRows;
  std::string code_dialect = "python (matplotlib)";
  std::string chart_style;  // empty keeps the built-in style section
  nlohmann::json snapshot;  // the file as read, for run_meta.json
};

// Throws ConfigError on unknown keys, bad types, or violated invariants.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

// Fresh gateway (and backend) per call, so concurrent runs never share mock queues.
std::unique_ptr<gateway::Gateway> make_gateway(const RunConfig& config);
std::unique_ptr<viz::Renderer> make_renderer(const RunConfig& config);
writer::WriterConfig writer_config(const RunConfig& config, const std::filesystem::path& work_dir);

}  // namespace chartloom::cli
