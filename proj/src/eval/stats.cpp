#include <cctype>

#include <spdlog/spdlog.h>

#include "chartloom/eval/eval.hpp"
#include "chartloom/gateway/prompts.hpp"
#include "chartloom/util/markdown.hpp"
#include "chartloom/util/strings.hpp"

namespace fs = std::filesystem;

namespace chartloom::eval {

using gateway::CompletionRequest;
using gateway::Message;
using gateway::MessageRole;

namespace {

std::string report_text(const fs::path& report_dir) {
  const auto path = report_dir / "report.md";
  if (!fs::is_regular_file(path)) throw IoError("missing " + path.string());
  return util::read_file(path.string());
}

std::string complete_text(gateway::Gateway& gateway, const std::string& template_id, const std::string& body) {
  CompletionRequest req;
  req.model_role = gateway::ModelRole::analysis_text;
  req.template_id = template_id;
  req.messages.push_back(Message::text(MessageRole::user, body));
  return gateway.complete(req).text;
}

}  // namespace

ReportStats report_stats_from_markdown(std::string_view markdown) {
  ReportStats stats;
  stats.figure_count = util::scan_image_links(markdown).size();
  stats.word_count = util::count_words(util::strip_fences_and_images(markdown));
  return stats;
}

ReportStats report_stats(const fs::path& report_dir) { return report_stats_from_markdown(report_text(report_dir)); }

std::string_view to_string(PropositionLabel label) {
  switch (label) {
    case PropositionLabel::invalid: return "invalid";
    case PropositionLabel::duplicate: return "duplicate";
    case PropositionLabel::simplified: return "simplified";
  }
  return "?";
}

std::vector<std::string> parse_propositions(std::string_view reply) {
  std::vector<std::string> out;
  for (const auto& raw : util::split_lines(reply)) {
    auto line = util::trim(raw);
    if (line.size() < 2 || (line[0] != '-' && line[0] != '*') || line[1] != ' ') continue;
    auto text = util::trim(line.substr(2));
    if (!text.empty()) out.emplace_back(text);
  }
  return out;
}

std::vector<Proposition> apply_labels(std::vector<std::string> texts, std::string_view reply) {
  std::vector<Proposition> props;
  for (auto& t : texts) props.push_back({std::move(t), PropositionLabel::invalid});
  std::vector<bool> labeled(props.size(), false);
  for (const auto& raw : util::split_lines(reply)) {
    auto line = util::trim(raw);
    std::size_t i = 0, n = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) n = n * 10 + static_cast<std::size_t>(line[i++] - '0');
    if (i == 0 || i >= line.size() || (line[i] != ':' && line[i] != '.' && line[i] != ')')) continue;
    if (n < 1 || n > props.size() || labeled[n - 1]) continue;
    auto word = util::to_lower(util::trim(line.substr(i + 1)));
    std::optional<PropositionLabel> label;
    if (word.rfind("simplified", 0) == 0) label = PropositionLabel::simplified;
    else if (word.rfind("duplicate", 0) == 0) label = PropositionLabel::duplicate;
    else if (word.rfind("invalid", 0) == 0) label = PropositionLabel::invalid;
    if (!label) continue;
    props[n - 1].label = *label;
    labeled[n - 1] = true;
  }
  auto missing = static_cast<std::size_t>(std::count(labeled.begin(), labeled.end(), false));
  if (missing > 0) spdlog::warn("{} of {} propositions left unlabeled; counted as invalid", missing, props.size());
  return props;
}

std::vector<Proposition> propositions(const fs::path& report_dir, gateway::Gateway& gateway) {
  const auto text = util::strip_fences_and_images(report_text(report_dir));
  if (util::count_words(text) == 0) return {};

  auto texts = parse_propositions(
      complete_text(gateway, "richness.extract", gateway::render_prompt("richness.extract", {{"report_text", text}})));
  if (texts.empty()) throw RichnessError("proposition extraction returned nothing for a non-empty report");

  std::string numbered;
  for (std::size_t i = 0; i < texts.size(); ++i) numbered += std::to_string(i + 1) + ". " + texts[i] + "\n";
  auto reply =
      complete_text(gateway, "richness.classify", gateway::render_prompt("richness.classify", {{"propositions", numbered}}));
  return apply_labels(std::move(texts), reply);
}

std::size_t content_richness(const fs::path& report_dir, gateway::Gateway& gateway) {
  auto props = propositions(report_dir, gateway);
  return static_cast<std::size_t>(std::count_if(props.begin(), props.end(), [](const Proposition& p) {
    return p.label == PropositionLabel::simplified;
  }));
}

void write_stats_csv(const std::vector<std::pair<std::string, ReportStats>>& rows, const fs::path& path) {
  std::string out = "report_dir,figures,words,content\n";
  for (const auto& [dir, s] : rows) {
    out += dir + "," + std::to_string(s.figure_count) + "," + std::to_string(s.word_count) + "," +
           (s.content_score ? std::to_string(*s.content_score) : "") + "\n";
  }
  util::write_file(path.string(), out);
}

CostSummary cost_summary(const std::vector<fs::path>& run_meta_paths) {
  if (run_meta_paths.empty()) throw PreconditionError("cost summary over no runs");
  CostSummary summary;
  for (const auto& path : run_meta_paths) {
    if (!fs::is_regular_file(path)) throw IoError("missing " + path.string());
    nlohmann::json meta;
    try {
      meta = nlohmann::json::parse(util::read_file(path.string()));
      summary.mean_api_calls += meta.at("api_calls").get<double>();
      summary.mean_latency_s += meta.at("wall_clock_s").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string() + ": " + e.what());
    }
  }
  summary.runs = run_meta_paths.size();
  summary.mean_api_calls /= static_cast<double>(summary.runs);
  summary.mean_latency_s /= static_cast<double>(summary.runs);
  return summary;
}

}  // namespace chartloom::eval
