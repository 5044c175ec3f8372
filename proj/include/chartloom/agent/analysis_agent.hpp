#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chartloom/agent/spec.hpp"
#include "chartloom/gateway/gateway.hpp"
#include "chartloom/ingest/dataset.hpp"
#include "chartloom/ingest/profile.hpp"

namespace chartloom::agent {

inline constexpr std::size_t kMinProbeFindings = 5;
inline constexpr std::size_t kMaxProbeFindings = 8;

struct TableSummary {
  std::string table_name;
  std::string digest;

  bool operator==(const TableSummary&) const = default;
};

// The EDA overview every later prompt is conditioned on.
struct DataOverview {
  std::vector<TableSummary> table_summaries;
  std::vector<std::string> probe_findings;
  std::string full_text;
  bool degraded = false;  // model reply had no parsable findings section

  bool operator==(const DataOverview&) const = default;
};

nlohmann::json to_json(const DataOverview& overview);

// Splits an overview reply into its findings list. Returns an empty list
// when the reply has no "Probe Findings" section.
std::vector<std::string> parse_probe_findings(std::string_view reply);

struct AnalysisIntent {
  std::string text;
};

struct Caption {
  std::string text;
  std::string request_id;
  bool fallback = false;  // vision unavailable; text is the chart title
};

class SpecPlanningError : public Error {
public:
  using Error::Error;
};

struct AgentConfig {
  std::size_t sample_rows = ingest::kDefaultSampleRows;
  std::string chart_style =
      "## Chart Style\n- Choose the chart type that best answers the request.\n"
      "- Embed pre-aggregated data; annotate key values directly on the chart.";
};

// The data-augmented analysis agent. Holds the dataset and, once
// build_overview has run, the overview as its memory; every later call is
// conditioned on both. One instance per report generation.
class AnalysisAgent {
public:
  AnalysisAgent(const ingest::Dataset& dataset, gateway::Gateway& gateway, AgentConfig config = {});

  // One analysis_text call. Throws PreconditionError on an empty dataset.
  const DataOverview& build_overview();
  const DataOverview& overview() const;
  bool has_overview() const { return overview_.has_value(); }
  // For callers that restore a previously built overview.
  void remember(DataOverview overview) { overview_ = std::move(overview); }

  // One analysis_text call; a second one only when the first reply has no
  // usable <visualization> spec block. Throws SpecPlanningError after that.
  std::pair<AnalysisIntent, VisualizationSpec> plan_spec(const std::string& request);

  // One vision call. Falls back to `title` when vision is unavailable.
  Caption caption(const gateway::Image& image, const AnalysisIntent& intent, const std::string& request,
                  const std::string& title, const std::string& request_id = {});

  const ingest::Dataset& dataset() const { return dataset_; }
  const std::vector<ingest::TableProfile>& profiles() const { return profiles_; }

  // Planning-prompt slot values; exposed for prompt snapshot tests.
  std::string summaries_slot() const;
  std::string tables_slot() const;

private:
  const ingest::Dataset& dataset_;
  gateway::Gateway& gateway_;
  AgentConfig config_;
  std::vector<ingest::TableProfile> profiles_;
  std::optional<DataOverview> overview_;
};

// Splits a planner reply into (text outside the tags, inner spec text).
// `found` is false when no complete <visualization> block exists.
struct SpecBlock {
  bool found = false;
  std::string outside;
  std::string inner;
};
SpecBlock extract_spec_block(std::string_view reply);

// Strips code fences and surrounding quotes from a model caption.
std::string clean_caption(std::string_view reply);

}  // namespace chartloom::agent
