#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chartloom/gateway/gateway.hpp"

namespace chartloom::eval {

enum class MetricLevel { chart, chapter, report };
std::string_view to_string(MetricLevel level);

struct MetricId {
  std::string id;  // read, layout, tc_cons, depth, info, vis_cons
  MetricLevel level;

  bool operator==(const MetricId&) const = default;
};

const std::vector<MetricId>& all_metrics();
std::optional<MetricId> parse_metric(std::string_view id);
// "read, layout, ..." for error messages.
std::string metric_ids();

struct ReportBundle {
  std::string method_id;
  std::filesystem::path dir;  // holds report.md and the figures it links
};

struct RankingRecord {
  std::string instance_id;
  std::string metric;
  std::map<std::string, int> ranks;  // method id -> 1..M

  bool operator==(const RankingRecord&) const = default;
};

class JudgeError : public Error {
public:
  using Error::Error;
};

// "A", "B", ..., "Z", "AA", "AB", ...
std::vector<std::string> judge_labels(std::size_t count);

// Label order (best first) from the reply's last "RANKING:" line, or from a
// bare "B > A > C" last line. nullopt unless it names every label exactly once.
std::optional<std::vector<std::string>> parse_ranking(std::string_view reply, const std::vector<std::string>& labels);

// Position i holds the index of the report shown under label i. Depends only
// on (seed, instance_id, count).
std::vector<std::size_t> label_permutation(std::uint64_t seed, std::string_view instance_id, std::size_t count);

// Judge prompt for one instance, with reports under anonymous labels.
gateway::CompletionRequest judge_request(const std::vector<ReportBundle>& reports, const MetricId& metric,
                                         const std::vector<std::size_t>& permutation);

// One vision call (two if the first reply has no parsable ranking).
RankingRecord judge_rank(const std::string& instance_id, const std::vector<ReportBundle>& reports,
                         const MetricId& metric, gateway::Gateway& gateway, std::uint64_t seed);

double average_rank(const std::vector<RankingRecord>& records, const std::string& method_id);

struct RankSummaryRow {
  std::string metric;
  std::string method;
  double mean_rank = 0;
};
// One row per (metric, method), sorted by metric then method.
std::vector<RankSummaryRow> summarize(const std::vector<RankingRecord>& records);

void write_ranks_json(const std::vector<RankingRecord>& records, const std::filesystem::path& path);
void write_rank_summary_csv(const std::vector<RankSummaryRow>& rows, const std::filesystem::path& path);

struct ReportStats {
  std::size_t figure_count = 0;
  std::size_t word_count = 0;
  std::optional<std::size_t> content_score;
};

ReportStats report_stats_from_markdown(std::string_view markdown);
// Throws IoError when report.md is missing.
ReportStats report_stats(const std::filesystem::path& report_dir);

enum class PropositionLabel { invalid, duplicate, simplified };
std::string_view to_string(PropositionLabel label);

struct Proposition {
  std::string text;
  PropositionLabel label = PropositionLabel::invalid;
};

class RichnessError : public Error {
public:
  using Error::Error;
};

// "- x" lines of an extraction reply.
std::vector<std::string> parse_propositions(std::string_view reply);
// "N: label" lines; unlabeled propositions stay invalid.
std::vector<Proposition> apply_labels(std::vector<std::string> texts, std::string_view reply);

// Extraction then classification, two analysis_text calls; an empty report
// makes none.
std::vector<Proposition> propositions(const std::filesystem::path& report_dir, gateway::Gateway& gateway);
std::size_t content_richness(const std::filesystem::path& report_dir, gateway::Gateway& gateway);

void write_stats_csv(const std::vector<std::pair<std::string, ReportStats>>& rows, const std::filesystem::path& path);

struct CostSummary {
  double mean_api_calls = 0;
  double mean_latency_s = 0;
  std::size_t runs = 0;
};

CostSummary cost_summary(const std::vector<std::filesystem::path>& run_meta_paths);

}  // namespace chartloom::eval
