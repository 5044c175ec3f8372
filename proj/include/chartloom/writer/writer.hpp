#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "chartloom/agent/analysis_agent.hpp"
#include "chartloom/gateway/gateway.hpp"
#include "chartloom/viz/chart_tool.hpp"

namespace chartloom::writer {

inline constexpr int kDefaultMaxSteps = 24;
inline const std::vector<std::string> kWriterStops = {"</visualization>", "<EOS>"};

struct OutlineSection {
  std::string heading;
  std::vector<std::string> points;

  bool operator==(const OutlineSection&) const = default;
};

struct Outline {
  std::string title;
  std::vector<OutlineSection> sections;
  std::string raw_markdown;

  bool operator==(const Outline&) const = default;
};

class OutlineError : public Error {
public:
  using Error::Error;
};

// Markdown inside the first ``` fence or """ block of a reply.
std::optional<std::string> extract_outline_block(std::string_view reply);
// Throws ParseError when the markdown has no "## " section.
Outline parse_outline(std::string_view markdown);

struct VisualEvidence {
  gateway::Image image;
  agent::Caption caption;
  std::string request;
  std::string request_id;
  std::string intent;
  agent::VisualizationSpec spec;
  std::vector<int> candidate_stages;  // stage index of every kept candidate
  int selected_stage = 0;
  std::vector<gateway::Image> candidate_images;  // only with keep_candidates
};

// Prose emitted by one writer step, and the request it ended with, if any.
struct TextEntry {
  std::string text;
  std::optional<std::string> request;
};

// The result injected after a request: evidence, or the failure reason.
struct EvidenceEntry {
  std::optional<VisualEvidence> evidence;
  std::string failure;
};

using HistoryEntry = std::variant<TextEntry, EvidenceEntry>;

struct History {
  std::vector<HistoryEntry> entries;
  int steps = 0;
  bool terminated = false;
};

std::string figure_unavailable_line(std::string_view reason);

// Overview text shared by the outline and report prompts.
std::string overview_digest(const agent::DataOverview& overview);

// Writer conversation: report prompt, overview, then the history with each
// request followed by its <visualization_result>. Images are attached only
// when `attach_images` is set.
std::vector<gateway::Message> history_messages(const History& history, const Outline& outline,
                                               const agent::DataOverview& overview, const std::string& user_intent,
                                               bool attach_images);

Outline plan_outline(const std::string& request, const agent::DataOverview& overview, gateway::Gateway& gateway);

// One writer call with the </visualization> and <EOS> stops.
gateway::CompletionResult step(const History& history, const Outline& outline, const agent::DataOverview& overview,
                               const std::string& user_intent, gateway::Gateway& gateway);

struct TextElement {
  std::string markdown;
};

struct FigureElement {
  std::string file_name;  // relative to the figures directory, e.g. fig_001.png
  VisualEvidence evidence;
};

using ReportElement = std::variant<TextElement, FigureElement>;

struct RequestFailure {
  std::string request_id;
  std::string request;
  std::string reason;
};

struct ReportDocument {
  std::vector<ReportElement> elements;
  Outline outline;
  agent::DataOverview overview;
  std::vector<RequestFailure> failures;
  std::vector<gateway::CallRecord> calls;
  std::size_t api_calls = 0;
  double total_latency_ms = 0;
  double wall_clock_s = 0;
  int steps = 0;
  std::string termination;  // eos, natural_end, length_limit, truncated_request, max_steps
  std::string source_id;
  nlohmann::json config_snapshot = nlohmann::json::object();

  std::size_t figure_count() const;
};

struct WriterConfig {
  int max_steps = kDefaultMaxSteps;
  agent::AgentConfig agent;
  viz::RefineConfig refine;
  bool keep_candidates = false;
  // When set, figures are written under work_dir/figures as they are produced.
  std::filesystem::path work_dir;
};

// Builds the overview and outline, then alternates writer steps with chart
// construction until <EOS>, a natural end, or max_steps.
ReportDocument run(const ingest::Dataset& dataset, const WriterConfig& config, gateway::Gateway& gateway,
                   viz::Renderer& renderer);

std::string report_markdown(const ReportDocument& doc);

// report.md, figures/, evidence.json, transcript.jsonl, run_meta.json.
void render_markdown(const ReportDocument& doc, const std::filesystem::path& out_dir);

std::string figure_file_name(std::size_t index);

}  // namespace chartloom::writer
