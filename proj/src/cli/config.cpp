#include "chartloom/cli/config.hpp"

#include <set>

#include "chartloom/util/strings.hpp"

namespace fs = std::filesystem;

namespace chartloom::cli {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "models",         "backend",     "mock_script",  "temperature",   "max_steps",   "n_retry",
      "n_refine",       "selection",   "retry_attempts", "backoff_ms",  "http_timeout_s", "renderer",
      "sandbox_cmd",    "mock_renderer", "timeout_s",  "keep_candidates", "seed",      "sample_rows",
      "code_dialect",   "chart_style",
  };
  return keys;
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

ModelConfig parse_model(const std::string& role, const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("models." + role + " must be an object");
  ModelConfig m;
  for (const auto& [key, _] : j.items()) {
    static const std::set<std::string> allowed = {"base_url", "model_name", "api_key_env", "multimodal", "enabled"};
    if (!allowed.count(key)) throw ConfigError("unknown key models." + role + "." + key);
  }
  read(j, "base_url", m.base_url);
  read(j, "model_name", m.model_name);
  read(j, "api_key_env", m.api_key_env);
  read(j, "multimodal", m.multimodal);
  read(j, "enabled", m.enabled);
  return m;
}

}  // namespace

RunConfig parse_run_config(const nlohmann::json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key.empty() || key[0] == '_') continue;  // comments
    if (!known_keys().count(key)) throw ConfigError("unknown config key '" + key + "'");
  }

  RunConfig c;
  c.snapshot = j;
  read(j, "backend", c.backend);
  read(j, "temperature", c.temperature);
  read(j, "max_steps", c.max_steps);
  read(j, "n_retry", c.n_retry);
  read(j, "n_refine", c.n_refine);
  read(j, "selection", c.selection);
  read(j, "retry_attempts", c.retry_attempts);
  read(j, "backoff_ms", c.backoff_ms);
  read(j, "http_timeout_s", c.http_timeout_s);
  read(j, "renderer", c.renderer);
  read(j, "sandbox_cmd", c.sandbox_cmd);
  read(j, "timeout_s", c.timeout_s);
  read(j, "keep_candidates", c.keep_candidates);
  read(j, "seed", c.seed);
  read(j, "sample_rows", c.sample_rows);
  read(j, "code_dialect", c.code_dialect);
  read(j, "chart_style", c.chart_style);
  if (j.contains("mock_renderer")) {
    c.mock_renderer = j.at("mock_renderer");
    if (!c.mock_renderer.is_object()) throw ConfigError("mock_renderer must be an object");
  }

  if (j.contains("models")) {
    if (!j.at("models").is_object()) throw ConfigError("models must be an object keyed by role");
    for (const auto& [name, m] : j.at("models").items()) {
      auto role = gateway::parse_model_role(name);
      if (!role) throw ConfigError("unknown model role '" + name + "' (expected writer_text, analysis_text, vision)");
      c.models[*role] = parse_model(name, m);
    }
  } else {
    c.models[gateway::ModelRole::writer_text] = {};
    c.models[gateway::ModelRole::analysis_text] = {};
    c.models[gateway::ModelRole::vision] = {{}, {}, {}, true, true};
  }

  if (c.backend == "mock") {
    if (!j.contains("mock_script")) throw ConfigError("backend=mock needs mock_script");
    const auto& script = j.at("mock_script");
    if (script.is_string()) {
      const auto path = resolve(base_dir, script.get<std::string>());
      if (!fs::is_regular_file(path)) throw ConfigError("mock_script not found: " + path.string());
      try {
        c.mock_script = nlohmann::json::parse(util::read_file(path.string()));
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError("mock_script " + path.string() + ": " + e.what());
      }
    } else if (script.is_object()) {
      c.mock_script = script;
    } else {
      throw ConfigError("mock_script must be a path or an inline object");
    }
  } else if (c.backend == "http") {
    for (const auto& [role, m] : c.models) {
      if (m.enabled && (m.base_url.empty() || m.model_name.empty())) {
        throw ConfigError("models." + std::string(gateway::to_string(role)) + " needs base_url and model_name");
      }
    }
  } else {
    throw ConfigError("backend must be 'mock' or 'http', got '" + c.backend + "'");
  }

  if (c.renderer == "sandbox") {
    if (util::trim(c.sandbox_cmd).empty()) throw ConfigError("renderer=sandbox needs sandbox_cmd");
  } else if (c.renderer != "mock") {
    throw ConfigError("renderer must be 'mock' or 'sandbox', got '" + c.renderer + "'");
  }
  if (c.temperature < 0) throw ConfigError("temperature must be >= 0");
  if (c.max_steps < 1) throw ConfigError("max_steps must be >= 1");
  if (c.n_retry < 1) throw ConfigError("n_retry must be >= 1");
  if (c.n_refine < 0) throw ConfigError("n_refine must be >= 0");
  if (c.retry_attempts < 1) throw ConfigError("retry_attempts must be >= 1");
  if (c.backoff_ms < 0) throw ConfigError("backoff_ms must be >= 0");
  if (c.timeout_s < 1 || c.timeout_s > viz::kMaxRenderTimeout.count()) {
    throw ConfigError("timeout_s must be within 1.." + std::to_string(viz::kMaxRenderTimeout.count()));
  }
  if (c.sample_rows < 1) throw ConfigError("sample_rows must be >= 1");
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw ConfigError("config file not found: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(util::read_file(path.string()));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_run_config(j, path.parent_path());
}

std::unique_ptr<gateway::Gateway> make_gateway(const RunConfig& config) {
  std::unique_ptr<gateway::Backend> backend;
  if (config.backend == "mock") {
    try {
      backend = gateway::MockBackend::from_json(config.mock_script);
    } catch (const ParseError& e) {
      throw ConfigError(e.what());
    }
  } else {
    backend = std::make_unique<gateway::HttpBackend>(config.http_timeout_s);
  }
  auto gw = std::make_unique<gateway::Gateway>(
      std::move(backend), gateway::RetryPolicy{config.retry_attempts, std::chrono::milliseconds(config.backoff_ms)});
  for (const auto& [role, m] : config.models) {
    gw->configure(role, {{m.base_url, m.model_name, m.api_key_env}, m.multimodal, m.enabled, config.temperature});
  }
  return gw;
}

std::unique_ptr<viz::Renderer> make_renderer(const RunConfig& config) {
  if (config.renderer == "sandbox") return std::make_unique<viz::SandboxRenderer>(config.sandbox_cmd);
  try {
    return viz::MockRenderer::from_json(config.mock_renderer);
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
}

writer::WriterConfig writer_config(const RunConfig& config, const fs::path& work_dir) {
  writer::WriterConfig w;
  w.max_steps = config.max_steps;
  w.agent.sample_rows = config.sample_rows;
  if (!config.chart_style.empty()) w.agent.chart_style = config.chart_style;
  w.refine.n_retry = config.n_retry;
  w.refine.n_refine = config.n_refine;
  w.refine.selection_enabled = config.selection;
  w.refine.dialect = config.code_dialect;
  w.refine.timeout = std::chrono::seconds(config.timeout_s);
  w.keep_candidates = config.keep_candidates;
  w.work_dir = work_dir;
  return w;
}

}  // namespace chartloom::cli
