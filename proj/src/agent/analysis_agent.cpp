#include "chartloom/agent/analysis_agent.hpp"

#include <cctype>

#include <spdlog/spdlog.h>

#include "chartloom/gateway/prompts.hpp"
#include "chartloom/tagparse/tag_parser.hpp"
#include "chartloom/util/strings.hpp"

namespace chartloom::agent {

using gateway::CompletionRequest;
using gateway::Message;
using gateway::MessageRole;
using gateway::ModelRole;

namespace {

bool is_heading(std::string_view line) { return line.starts_with("#"); }

// "1. text", "2) text", "- text", "* text" -> "text"
std::optional<std::string> list_item(std::string_view line) {
  auto t = util::trim(line);
  if (t.size() >= 2 && (t[0] == '-' || t[0] == '*') && t[1] == ' ') return std::string(util::trim(t.substr(2)));
  std::size_t i = 0;
  while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i;
  if (i > 0 && i + 1 < t.size() && (t[i] == '.' || t[i] == ')') && t[i + 1] == ' ') {
    return std::string(util::trim(t.substr(i + 2)));
  }
  return std::nullopt;
}

}  // namespace

nlohmann::json to_json(const DataOverview& overview) {
  nlohmann::json j;
  auto& tables = j["table_summaries"] = nlohmann::json::array();
  for (const auto& s : overview.table_summaries) tables.push_back({{"table", s.table_name}, {"digest", s.digest}});
  j["probe_findings"] = overview.probe_findings;
  j["full_text"] = overview.full_text;
  j["degraded"] = overview.degraded;
  return j;
}

std::vector<std::string> parse_probe_findings(std::string_view reply) {
  std::vector<std::string> findings;
  bool in_section = false;
  for (const auto& line : util::split_lines(reply)) {
    if (is_heading(line)) {
      if (in_section) break;
      in_section = util::to_lower(line).find("probe finding") != std::string::npos;
      continue;
    }
    if (!in_section) continue;
    if (auto item = list_item(line); item && !item->empty()) findings.push_back(std::move(*item));
  }
  return findings;
}

SpecBlock extract_spec_block(std::string_view reply) {
  SpecBlock block;
  auto open = reply.find(tagparse::kOpenTag);
  if (open == std::string_view::npos) return block;
  auto inner_start = open + tagparse::kOpenTag.size();
  auto close = reply.find(tagparse::kCloseTag, inner_start);
  if (close == std::string_view::npos) return block;
  block.found = true;
  block.inner = std::string(reply.substr(inner_start, close - inner_start));
  std::string outside = std::string(reply.substr(0, open)) + "\n" +
                        std::string(reply.substr(close + tagparse::kCloseTag.size()));
  block.outside = std::string(util::trim(outside));
  return block;
}

std::string clean_caption(std::string_view reply) {
  std::string text(util::trim(reply));
  if (auto fence = util::first_fenced_block(text); fence.found) text = fence.body;
  text = std::string(util::trim(text));
  util::replace_all(text, "```", "");
  // Collapse to a single line of plain text.
  std::string flat;
  bool space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !flat.empty();
      continue;
    }
    if (space) flat += ' ';
    space = false;
    flat += c;
  }
  if (flat.size() >= 2 && flat.front() == '"' && flat.back() == '"') flat = flat.substr(1, flat.size() - 2);
  return flat;
}

AnalysisAgent::AnalysisAgent(const ingest::Dataset& dataset, gateway::Gateway& gateway, AgentConfig config)
    : dataset_(dataset), gateway_(gateway), config_(std::move(config)) {
  profiles_.reserve(dataset_.tables.size());
  for (const auto& t : dataset_.tables) profiles_.push_back(ingest::profile_table(t));
}

const DataOverview& AnalysisAgent::overview() const {
  if (!overview_) throw PreconditionError("data overview has not been built");
  return *overview_;
}

std::string AnalysisAgent::tables_slot() const {
  std::string out;
  for (const auto& t : dataset_.tables) {
    out += "### " + t.name + "\n```csv\n" + ingest::sample_rows(t, config_.sample_rows) + "```\n";
  }
  return out;
}

std::string AnalysisAgent::summaries_slot() const {
  std::string out;
  if (overview_) out += "### Data Overview\n" + overview_->full_text + "\n\n";
  out += "### Table Profiles\n";
  for (const auto& p : profiles_) out += ingest::profile_digest(p);
  return out;
}

const DataOverview& AnalysisAgent::build_overview() {
  ingest::validate_dataset(dataset_);

  DataOverview overview;
  std::string profiles;
  for (const auto& p : profiles_) {
    auto digest = ingest::profile_digest(p);
    overview.table_summaries.push_back({p.table_name, digest});
    profiles += digest + "\n";
  }

  CompletionRequest req;
  req.model_role = ModelRole::analysis_text;
  req.template_id = "overview";
  req.messages.push_back(Message::text(
      MessageRole::user, gateway::render_prompt("overview", {{"profiles", profiles}, {"tables", tables_slot()}})));
  auto result = gateway_.complete(req);

  overview.full_text = std::string(util::trim(result.text));
  overview.probe_findings = parse_probe_findings(result.text);
  if (overview.probe_findings.empty()) {
    overview.degraded = true;
    spdlog::warn("overview reply has no probe findings section; keeping full text only");
  } else if (overview.probe_findings.size() < kMinProbeFindings || overview.probe_findings.size() > kMaxProbeFindings) {
    spdlog::warn("overview has {} probe findings, expected {}-{}", overview.probe_findings.size(), kMinProbeFindings,
                 kMaxProbeFindings);
  }
  if (overview.full_text.empty()) {
    overview.degraded = true;
    overview.full_text = profiles;
  }
  overview_ = std::move(overview);
  return *overview_;
}

std::pair<AnalysisIntent, VisualizationSpec> AnalysisAgent::plan_spec(const std::string& request) {
  if (util::trim(request).empty()) throw PreconditionError("visualization request is empty");

  CompletionRequest req;
  req.model_role = ModelRole::analysis_text;
  req.template_id = "planning";
  req.messages.push_back(Message::text(
      MessageRole::user, gateway::render_prompt("planning", {{"chart_style", config_.chart_style},
                                                              {"summaries", summaries_slot()},
                                                              {"tables", tables_slot()},
                                                              {"request", request}})));

  std::string problem;
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto result = gateway_.complete(req);
    auto block = extract_spec_block(result.text);
    if (!block.found) {
      problem = "no <visualization></visualization> block";
    } else {
      try {
        auto spec = parse_spec(block.inner);
        if (spec.ref_tables.empty()) spec.ref_tables = infer_ref_tables(spec, dataset_);
        AnalysisIntent intent{block.outside.empty() ? request : block.outside};
        return {std::move(intent), std::move(spec)};
      } catch (const Error& e) {
        problem = e.what();
      }
    }
    if (attempt == 0) {
      spdlog::warn("spec planning reply unusable ({}); reprompting once", problem);
      req.messages.push_back(Message::text(MessageRole::assistant, result.text));
      req.messages.push_back(Message::text(
          MessageRole::user, "Your reply could not be used: " + problem +
                                 ". Reply again with the visualization description inside "
                                 "<visualization></visualization> tags, strictly following the yaml output format."));
    }
  }
  throw SpecPlanningError("spec planning failed for request '" + request + "': " + problem);
}

Caption AnalysisAgent::caption(const gateway::Image& image, const AnalysisIntent& intent, const std::string& request,
                               const std::string& title, const std::string& request_id) {
  if (image.empty()) throw PreconditionError("caption needs a non-empty chart image");

  auto fallback = [&](const std::string& why) {
    spdlog::warn("caption falls back to chart title: {}", why);
    return Caption{title, request_id, true};
  };
  if (!gateway_.available(ModelRole::vision)) return fallback("vision role unavailable");

  CompletionRequest req;
  req.model_role = ModelRole::vision;
  req.template_id = "caption";
  Message msg;
  msg.role = MessageRole::user;
  msg.parts.emplace_back(gateway::render_prompt(
      "caption", {{"title", title}, {"user_intent", intent.text}, {"visualization_request", request}}));
  msg.parts.emplace_back(image);
  req.messages.push_back(std::move(msg));

  try {
    auto result = gateway_.complete_multimodal(req);
    auto text = clean_caption(result.text);
    if (text.empty()) return fallback("empty caption reply");
    return Caption{std::move(text), request_id, false};
  } catch (const gateway::GatewayError& e) {
    if (e.kind() == gateway::GatewayError::Kind::exhausted) throw;
    return fallback(e.what());
  }
}

}  // namespace chartloom::agent
