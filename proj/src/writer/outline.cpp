#include <cctype>

#include <spdlog/spdlog.h>

#include "chartloom/gateway/prompts.hpp"
#include "chartloom/util/strings.hpp"
#include "chartloom/writer/writer.hpp"

namespace chartloom::writer {

using gateway::CompletionRequest;
using gateway::Message;
using gateway::MessageRole;

namespace {

bool has_section(std::string_view markdown) {
  for (const auto& line : util::split_lines(markdown)) {
    if (util::trim(line).substr(0, 3) == "## ") return true;
  }
  return false;
}

// "- x", "* x", "+ x", "1. x" -> "x"; nullopt for anything else.
std::optional<std::string> bullet_text(std::string_view line) {
  auto t = util::trim(line);
  if (t.size() >= 2 && (t[0] == '-' || t[0] == '*' || t[0] == '+') && t[1] == ' ') return std::string(util::trim(t.substr(2)));
  std::size_t i = 0;
  while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) ++i;
  if (i > 0 && i + 1 < t.size() && (t[i] == '.' || t[i] == ')') && t[i + 1] == ' ') {
    return std::string(util::trim(t.substr(i + 2)));
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> extract_outline_block(std::string_view reply) {
  auto fence = util::first_fenced_block(reply);
  if (fence.found && has_section(fence.body)) return std::string(util::trim(fence.body));

  constexpr std::string_view kQuotes = "\"\"\"";
  auto open = reply.find(kQuotes);
  if (open != std::string_view::npos) {
    auto close = reply.find(kQuotes, open + kQuotes.size());
    if (close != std::string_view::npos) {
      auto body = reply.substr(open + kQuotes.size(), close - open - kQuotes.size());
      if (has_section(body)) return std::string(util::trim(body));
    }
  }
  return std::nullopt;
}

Outline parse_outline(std::string_view markdown) {
  Outline outline;
  outline.raw_markdown = std::string(util::trim(markdown));
  for (const auto& raw : util::split_lines(markdown)) {
    auto line = util::trim(raw);
    if (line.substr(0, 2) == "# " && outline.title.empty() && outline.sections.empty()) {
      outline.title = std::string(util::trim(line.substr(2)));
    } else if (line.substr(0, 3) == "## ") {
      outline.sections.push_back({std::string(util::trim(line.substr(3))), {}});
    } else if (auto point = bullet_text(raw); point && !outline.sections.empty()) {
      // "..." is the template's own elision, not content.
      if (!point->empty() && *point != "..." && *point != "…") outline.sections.back().points.push_back(*point);
    }
  }
  if (outline.sections.empty()) throw ParseError("outline has no '## ' sections");
  if (outline.title.empty()) outline.title = "Data Report";
  return outline;
}

Outline plan_outline(const std::string& request, const agent::DataOverview& overview, gateway::Gateway& gateway) {
  if (util::trim(request).empty()) throw PreconditionError("user request is empty");

  CompletionRequest req;
  req.model_role = gateway::ModelRole::writer_text;
  req.template_id = "outline";
  req.messages.push_back(Message::text(
      MessageRole::user,
      gateway::render_prompt("outline", {{"user_intent", request}, {"summaries", overview_digest(overview)}})));

  std::string problem;
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto reply = gateway.complete(req).text;
    if (auto block = extract_outline_block(reply)) {
      try {
        return parse_outline(*block);
      } catch (const ParseError& e) {
        problem = e.what();
      }
    } else {
      problem = "no Markdown code block with '## ' sections";
    }
    spdlog::warn("outline reply unusable ({}){}", problem, attempt == 0 ? "; asking again" : "");
    req.messages.push_back(Message::text(MessageRole::assistant, reply));
    req.messages.push_back(Message::text(
        MessageRole::user, "Your reply could not be used: " + problem +
                               ". Reply with the complete outline inside a single Markdown code block, "
                               "with a '# ' title and '## ' section headings."));
  }
  throw OutlineError("outline generation failed: " + problem);
}

}  // namespace chartloom::writer
