#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "chartloom/agent/spec.hpp"
#include "chartloom/gateway/gateway.hpp"
#include "chartloom/viz/renderer.hpp"

namespace chartloom::viz {

struct ChartCandidate {
  std::string code;
  gateway::Image image;
  int stage_index = 0;  // 0 is the Stage-1 survivor, j the j-th refinement
  std::vector<std::string> feedback_history;
};

struct RefineConfig {
  int n_retry = 3;   // Stage-1 attempts
  int n_refine = 2;  // Stage-2 critique/refine iterations
  bool selection_enabled = true;
  std::string dialect = "python (matplotlib)";
  std::chrono::seconds timeout{60};
  std::filesystem::path workdir = std::filesystem::temp_directory_path() / "chartloom-render";
};

// Model reply held no fenced code block.
class CodegenError : public Error {
public:
  using Error::Error;
};

// Every Stage-1 attempt failed.
class ChartFailureError : public Error {
public:
  ChartFailureError(int attempts, std::string last_diagnostics)
      : Error("chart generation failed after " + std::to_string(attempts) + " attempts: " + last_diagnostics),
        attempts_(attempts),
        last_diagnostics_(std::move(last_diagnostics)) {}
  int attempts() const { return attempts_; }
  const std::string& last_diagnostics() const { return last_diagnostics_; }

private:
  int attempts_;
  std::string last_diagnostics_;
};

struct ChartResult {
  ChartCandidate selected;
  std::vector<ChartCandidate> candidates;  // after dedupe, in creation order
  int stage1_attempts = 0;
  int codegen_calls = 0;  // generate + refine
  int critique_calls = 0;
  int selection_calls = 0;
  bool refinement_skipped = false;
  bool selection_fallback = false;
};

// Body of the first fenced code block; throws CodegenError without one.
std::string extract_code(std::string_view reply);

// First integer in a selection reply, if it indexes one of `count` candidates.
std::optional<std::size_t> parse_candidate_index(std::string_view reply, std::size_t count);

// Three-stage chart construction over a pluggable renderer:
//   1. generate code and render, retrying until the first success (<= n_retry)
//   2. critique the latest image, refine the code, render; keep every success
//   3. if more than one distinct image survives, ask the vision model to pick
class ChartTool {
public:
  ChartTool(gateway::Gateway& gateway, Renderer& renderer, RefineConfig config = {});

  std::string generate_code(const agent::VisualizationSpec& spec, const std::vector<std::pair<std::string, std::string>>& failures = {});
  RenderOutcome render(const std::string& code);
  // nullopt means the vision role is unavailable and refinement is skipped.
  std::optional<std::string> critique(const gateway::Image& image, const std::string& title);
  std::string refine(const std::string& prev_code, const std::string& feedback, const agent::VisualizationSpec& spec);
  // Index into `candidates`. No gateway call when there is one candidate.
  std::size_t select_best(const std::vector<ChartCandidate>& candidates, const std::string& request,
                          bool* used_fallback = nullptr);

  ChartResult produce_chart(const agent::VisualizationSpec& spec, const std::string& request);

  const RefineConfig& config() const { return config_; }

private:
  std::filesystem::path next_workdir();

  gateway::Gateway& gateway_;
  Renderer& renderer_;
  RefineConfig config_;
  std::size_t render_counter_ = 0;
};

}  // namespace chartloom::viz
