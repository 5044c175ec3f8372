#include "chartloom/viz/chart_tool.hpp"

#include <cctype>
#include <set>

#include <spdlog/spdlog.h>

#include "chartloom/gateway/backend.hpp"
#include "chartloom/gateway/prompts.hpp"
#include "chartloom/util/strings.hpp"

namespace chartloom::viz {

using gateway::CompletionRequest;
using gateway::Message;
using gateway::MessageRole;
using gateway::ModelRole;

namespace {

std::string image_hash(const gateway::Image& image) {
  return gateway::sha256_hex({reinterpret_cast<const char*>(image.bytes->data()), image.bytes->size()});
}

}  // namespace

std::string extract_code(std::string_view reply) {
  auto fence = util::first_fenced_block(reply);
  if (!fence.found || util::trim(fence.body).empty()) throw CodegenError("reply contains no fenced code block");
  return fence.body;
}

std::optional<std::size_t> parse_candidate_index(std::string_view reply, std::size_t count) {
  for (std::size_t i = 0; i < reply.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(reply[i]))) continue;
    std::size_t j = i;
    std::size_t value = 0;
    while (j < reply.size() && std::isdigit(static_cast<unsigned char>(reply[j]))) {
      value = value * 10 + static_cast<std::size_t>(reply[j] - '0');
      if (value > 1'000'000) break;
      ++j;
    }
    if (value < count) return value;
    return std::nullopt;
  }
  return std::nullopt;
}

ChartTool::ChartTool(gateway::Gateway& gateway, Renderer& renderer, RefineConfig config)
    : gateway_(gateway), renderer_(renderer), config_(std::move(config)) {
  if (config_.n_retry < 1) throw ConfigError("n_retry must be >= 1");
  if (config_.n_refine < 0) throw ConfigError("n_refine must be >= 0");
}

std::filesystem::path ChartTool::next_workdir() {
  char name[32];
  std::snprintf(name, sizeof name, "job_%04zu", ++render_counter_);
  return config_.workdir / name;
}

std::string ChartTool::generate_code(const agent::VisualizationSpec& spec,
                                     const std::vector<std::pair<std::string, std::string>>& failures) {
  CompletionRequest req;
  req.model_role = ModelRole::analysis_text;
  req.template_id = "chart.codegen";
  req.messages.push_back(Message::text(
      MessageRole::user,
      gateway::render_prompt("chart.codegen", {{"dialect", config_.dialect}, {"spec", agent::serialize_spec(spec)}})));
  // Earlier failed attempts ride along so a retry is not the identical prompt.
  for (const auto& [code, diagnostics] : failures) {
    req.messages.push_back(Message::text(MessageRole::assistant, "```\n" + code + "\n```"));
    req.messages.push_back(Message::text(
        MessageRole::user, "That program failed:\n" + diagnostics +
                               "\nReturn a corrected, complete program in a single fenced code block."));
  }
  return extract_code(gateway_.complete(req).text);
}

RenderOutcome ChartTool::render(const std::string& code) {
  auto outcome = renderer_.render(code, next_workdir(), config_.timeout);
  if (outcome.success && outcome.image.empty()) return RenderOutcome::failed("renderer returned an empty image");
  if (!outcome.success && outcome.diagnostics.empty()) outcome.diagnostics = "render failed";
  return outcome;
}

std::optional<std::string> ChartTool::critique(const gateway::Image& image, const std::string& title) {
  if (image.empty()) throw PreconditionError("critique needs a non-empty image");
  if (!gateway_.available(ModelRole::vision)) {
    spdlog::info("vision role unavailable; skipping chart refinement");
    return std::nullopt;
  }
  CompletionRequest req;
  req.model_role = ModelRole::vision;
  req.template_id = "chart.critique";
  Message msg;
  msg.role = MessageRole::user;
  msg.parts.emplace_back(gateway::render_prompt("chart.critique", {{"title", title}}));
  msg.parts.emplace_back(image);
  req.messages.push_back(std::move(msg));
  try {
    auto text = std::string(util::trim(gateway_.complete_multimodal(req).text));
    if (text.empty()) {
      spdlog::warn("empty critique; skipping chart refinement");
      return std::nullopt;
    }
    return text;
  } catch (const gateway::GatewayError& e) {
    if (e.kind() == gateway::GatewayError::Kind::exhausted) throw;
    spdlog::warn("critique failed ({}); skipping chart refinement", e.what());
    return std::nullopt;
  }
}

std::string ChartTool::refine(const std::string& prev_code, const std::string& feedback,
                              const agent::VisualizationSpec& spec) {
  if (util::trim(feedback).empty()) throw PreconditionError("refine needs non-empty feedback");
  CompletionRequest req;
  req.model_role = ModelRole::analysis_text;
  req.template_id = "chart.refine";
  req.messages.push_back(Message::text(
      MessageRole::user, gateway::render_prompt("chart.refine", {{"dialect", config_.dialect},
                                                                 {"spec", agent::serialize_spec(spec)},
                                                                 {"code", prev_code},
                                                                 {"feedback", feedback}})));
  return extract_code(gateway_.complete(req).text);
}

std::size_t ChartTool::select_best(const std::vector<ChartCandidate>& candidates, const std::string& request,
                                   bool* used_fallback) {
  if (candidates.empty()) throw PreconditionError("select_best needs at least one candidate");
  if (used_fallback) *used_fallback = false;
  if (candidates.size() == 1) return 0;

  const std::size_t last = candidates.size() - 1;
  auto fallback = [&](const std::string& why) {
    spdlog::warn("chart selection falls back to the most refined candidate: {}", why);
    if (used_fallback) *used_fallback = true;
    return last;
  };
  if (!config_.selection_enabled) return last;
  if (!gateway_.available(ModelRole::vision)) return fallback("vision role unavailable");

  CompletionRequest req;
  req.model_role = ModelRole::vision;
  req.template_id = "chart.select";
  Message msg;
  msg.role = MessageRole::user;
  msg.parts.emplace_back(gateway::render_prompt(
      "chart.select",
      {{"count", std::to_string(candidates.size())}, {"last", std::to_string(last)}, {"request", request}}));
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    msg.parts.emplace_back("Candidate " + std::to_string(i) + ":");
    msg.parts.emplace_back(candidates[i].image);
  }
  req.messages.push_back(std::move(msg));

  std::string reply;
  try {
    reply = gateway_.complete_multimodal(req).text;
  } catch (const gateway::GatewayError& e) {
    if (e.kind() == gateway::GatewayError::Kind::exhausted) throw;
    return fallback(e.what());
  }
  if (auto index = parse_candidate_index(reply, candidates.size())) return *index;
  return fallback("unparsable reply '" + std::string(util::trim(reply)).substr(0, 80) + "'");
}

ChartResult ChartTool::produce_chart(const agent::VisualizationSpec& spec, const std::string& request) {
  agent::validate_spec(spec);
  ChartResult result;

  // Stage 1: first successful execution wins.
  std::optional<ChartCandidate> initial;
  std::vector<std::pair<std::string, std::string>> failures;
  std::string last_diagnostics;
  for (int attempt = 1; attempt <= config_.n_retry && !initial; ++attempt) {
    result.stage1_attempts = attempt;
    std::string code;
    ++result.codegen_calls;
    try {
      code = generate_code(spec, failures);
    } catch (const CodegenError& e) {
      last_diagnostics = e.what();
      failures.emplace_back("", last_diagnostics);
      continue;
    }
    auto outcome = render(code);
    if (outcome.success) {
      initial = ChartCandidate{code, gateway::Image::png(std::move(outcome.image)), 0, {}};
    } else {
      last_diagnostics = outcome.diagnostics;
      failures.emplace_back(code, outcome.diagnostics);
    }
  }
  if (!initial) throw ChartFailureError(result.stage1_attempts, last_diagnostics);

  // Stage 2: critique -> refine -> render; failed refinements are dropped.
  std::vector<ChartCandidate> candidates{*initial};
  const ChartCandidate* current = &candidates.back();
  for (int j = 1; j <= config_.n_refine; ++j) {
    if (gateway_.available(ModelRole::vision)) ++result.critique_calls;
    auto feedback = critique(current->image, spec.title);
    if (!feedback) {
      result.refinement_skipped = true;
      break;
    }
    ++result.codegen_calls;
    std::string code;
    try {
      code = refine(current->code, *feedback, spec);
    } catch (const CodegenError& e) {
      spdlog::warn("refinement {} produced no code: {}", j, e.what());
      continue;
    }
    auto outcome = render(code);
    if (!outcome.success) {
      spdlog::info("refinement {} failed to render; keeping previous chart", j);
      continue;
    }
    ChartCandidate next{code, gateway::Image::png(std::move(outcome.image)), j, current->feedback_history};
    next.feedback_history.push_back(*feedback);
    candidates.push_back(std::move(next));
    current = &candidates.back();
  }

  // Stage 3: dedupe byte-identical images, then pick.
  std::set<std::string> seen;
  for (auto& c : candidates) {
    if (seen.insert(image_hash(c.image)).second) result.candidates.push_back(std::move(c));
  }
  const bool will_call = result.candidates.size() > 1 && config_.selection_enabled &&
                         gateway_.available(ModelRole::vision);
  auto index = select_best(result.candidates, request, &result.selection_fallback);
  if (will_call) result.selection_calls = 1;
  result.selected = result.candidates[index];
  return result;
}

}  // namespace chartloom::viz
