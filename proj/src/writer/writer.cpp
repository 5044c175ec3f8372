#include "chartloom/writer/writer.hpp"

#include <cstdio>

#include <spdlog/spdlog.h>

#include "chartloom/gateway/prompts.hpp"
#include "chartloom/tagparse/tag_parser.hpp"
#include "chartloom/util/strings.hpp"

namespace fs = std::filesystem;

namespace chartloom::writer {

using gateway::CompletionRequest;
using gateway::Message;
using gateway::MessageRole;
using gateway::ModelRole;

std::string figure_unavailable_line(std::string_view reason) {
  std::string flat;
  for (const auto& line : util::split_lines(reason)) {
    auto t = util::trim(line);
    if (t.empty()) continue;
    if (!flat.empty()) flat += ' ';
    flat += t;
  }
  if (flat.size() > 200) flat = flat.substr(0, 197) + "...";
  return "*[figure unavailable: " + flat + "]*";
}

std::string figure_file_name(std::size_t index) {
  char name[32];
  std::snprintf(name, sizeof name, "fig_%03zu.png", index);
  return name;
}

std::string overview_digest(const agent::DataOverview& overview) {
  std::string out = "### Data Overview\n" + overview.full_text + "\n\n### Table Profiles\n";
  for (const auto& t : overview.table_summaries) out += t.digest + "\n";
  return out;
}

std::size_t ReportDocument::figure_count() const {
  std::size_t n = 0;
  for (const auto& e : elements) n += std::holds_alternative<FigureElement>(e);
  return n;
}

std::vector<Message> history_messages(const History& history, const Outline& outline,
                                      const agent::DataOverview& overview, const std::string& user_intent,
                                      bool attach_images) {
  std::vector<Message> messages;
  messages.push_back(Message::text(
      MessageRole::system,
      gateway::render_prompt("report", {{"user_intent", user_intent}, {"outline", outline.raw_markdown}})));
  messages.push_back(Message::text(MessageRole::user, "## Data Overview\n\n" + overview_digest(overview) +
                                                          "\n\nWrite the report following the outline."));

  std::string written;
  int figure = 0;
  for (const auto& entry : history.entries) {
    if (const auto* text = std::get_if<TextEntry>(&entry)) {
      written += text->text;
      if (text->request) {
        written += std::string(tagparse::kOpenTag) + "\n" + *text->request + "\n" + std::string(tagparse::kCloseTag);
      }
      continue;
    }
    const auto& ev = std::get<EvidenceEntry>(entry);
    messages.push_back(Message::text(MessageRole::assistant, written));
    written.clear();
    Message result;
    result.role = MessageRole::user;
    if (ev.evidence) {
      ++figure;
      result.parts.emplace_back("<visualization_result>\nFigure " + std::to_string(figure) + ": " +
                                ev.evidence->spec.title + "\n" + ev.evidence->caption.text + "\n");
      if (attach_images) result.parts.emplace_back(ev.evidence->image);
    } else {
      result.parts.emplace_back("<visualization_result>\n" + figure_unavailable_line(ev.failure) + "\n");
    }
    result.parts.emplace_back(std::string("</visualization_result>"));
    messages.push_back(std::move(result));
  }
  if (!written.empty()) messages.push_back(Message::text(MessageRole::assistant, written));
  return messages;
}

gateway::CompletionResult step(const History& history, const Outline& outline, const agent::DataOverview& overview,
                               const std::string& user_intent, gateway::Gateway& gateway) {
  if (history.terminated) throw PreconditionError("writer history is already terminated");
  CompletionRequest req;
  req.model_role = ModelRole::writer_text;
  req.template_id = "report";
  req.stop_sequences = kWriterStops;
  req.messages = history_messages(history, outline, overview, user_intent, gateway.multimodal(ModelRole::writer_text));
  return gateway.complete(req);
}

namespace {

struct ParsedStep {
  std::string text;
  std::optional<std::string> request;
  bool terminal = false;
  std::optional<std::string> truncated;  // partial request at end of stream
};

void absorb(ParsedStep& out, const std::vector<tagparse::Segment>& segments) {
  for (const auto& seg : segments) {
    if (const auto* t = std::get_if<tagparse::TextSegment>(&seg)) {
      out.text += t->content;
    } else if (const auto* r = std::get_if<tagparse::VizRequestSegment>(&seg)) {
      out.request = r->query;
    } else {
      out.terminal = true;
    }
  }
}

// Segments one step's output. A stray close tag is dropped and parsing
// resumes after it; the text before it is kept.
ParsedStep parse_step(std::string_view raw) {
  ParsedStep out;
  std::size_t start = 0;
  for (;;) {
    tagparse::TagParser parser;
    try {
      absorb(out, parser.feed(raw.substr(start)));
      if (out.request || out.terminal) return out;
      absorb(out, parser.finish());
      return out;
    } catch (const tagparse::MalformedTagError& e) {
      absorb(out, e.emitted());
      out.text += e.text_before();
      spdlog::warn("dropping stray {} in writer output", tagparse::kCloseTag);
      start += e.offset() + tagparse::kCloseTag.size();
    } catch (const tagparse::TruncatedRequestError& e) {
      out.truncated = e.partial();
      return out;
    }
  }
}

class Run {
public:
  Run(const ingest::Dataset& dataset, const WriterConfig& config, gateway::Gateway& gateway, viz::Renderer& renderer)
      : dataset_(dataset),
        config_(config),
        gateway_(gateway),
        agent_(dataset, gateway, config.agent),
        tool_(gateway, renderer, refine_config(config)) {}

  ReportDocument execute() {
    const auto started = std::chrono::steady_clock::now();
    if (config_.max_steps < 1) throw ConfigError("max_steps must be >= 1");

    doc_.source_id = dataset_.source_id;
    doc_.overview = agent_.build_overview();
    doc_.outline = plan_outline(dataset_.request, doc_.overview, gateway_);

    bool reprompted = false;
    for (;;) {
      if (history_.steps >= config_.max_steps) {
        spdlog::warn("writer reached max_steps={} without <EOS>; stopping", config_.max_steps);
        doc_.termination = "max_steps";
        break;
      }
      auto result = step(history_, doc_.outline, doc_.overview, dataset_.request, gateway_);
      ++history_.steps;
      std::string raw = result.text;
      if (result.finish.kind == gateway::FinishReason::Kind::stop_sequence) raw += result.finish.sequence;
      auto parsed = parse_step(raw);

      if (parsed.truncated) {
        if (!reprompted) {
          spdlog::warn("writer output ended inside a visualization request; retrying the step");
          reprompted = true;
          continue;
        }
        spdlog::warn("writer output ended inside a visualization request again; dropping it and stopping");
        add_text(parsed.text, std::nullopt);
        doc_.termination = "truncated_request";
        break;
      }
      reprompted = false;

      add_text(parsed.text, parsed.request);
      if (parsed.request) {
        fulfil(*parsed.request);
        continue;
      }
      // Stopped on a close tag that had no open tag: the tag is gone, keep writing.
      if (!parsed.terminal && result.finish == gateway::FinishReason::stop(std::string(tagparse::kCloseTag))) continue;
      if (parsed.terminal) {
        doc_.termination = "eos";
      } else if (result.finish.kind == gateway::FinishReason::Kind::length_limit) {
        spdlog::warn("writer hit the length limit; treating it as the end of the report");
        doc_.termination = "length_limit";
      } else {
        doc_.termination = "natural_end";
      }
      break;
    }
    history_.terminated = true;

    doc_.steps = history_.steps;
    doc_.calls = gateway_.ledger().snapshot();
    doc_.api_calls = gateway_.ledger().api_calls();
    doc_.total_latency_ms = gateway_.ledger().total_latency_ms();
    doc_.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return std::move(doc_);
  }

private:
  static viz::RefineConfig refine_config(const WriterConfig& config) {
    auto refine = config.refine;
    if (!config.work_dir.empty()) refine.workdir = config.work_dir / "render";
    return refine;
  }

  void add_text(const std::string& text, std::optional<std::string> request) {
    history_.entries.push_back(TextEntry{text, request});
    doc_.elements.push_back(TextElement{text});
  }

  void fulfil(const std::string& request) {
    char id[32];
    std::snprintf(id, sizeof id, "req_%03d", ++request_count_);
    const std::string request_id = id;

    std::string failure;
    try {
      if (util::trim(request).empty()) throw agent::SpecPlanningError("empty visualization request");
      auto [intent, spec] = agent_.plan_spec(request);
      auto chart = tool_.produce_chart(spec, request);
      auto caption = agent_.caption(chart.selected.image, intent, request, spec.title, request_id);

      VisualEvidence ev;
      ev.image = chart.selected.image;
      ev.caption = std::move(caption);
      ev.request = request;
      ev.request_id = request_id;
      ev.intent = intent.text;
      ev.spec = std::move(spec);
      ev.selected_stage = chart.selected.stage_index;
      for (const auto& c : chart.candidates) {
        ev.candidate_stages.push_back(c.stage_index);
        if (config_.keep_candidates) ev.candidate_images.push_back(c.image);
      }
      const auto file = figure_file_name(doc_.figure_count() + 1);
      write_figure(file, ev);
      history_.entries.push_back(EvidenceEntry{ev, {}});
      doc_.elements.push_back(FigureElement{file, std::move(ev)});
      return;
    } catch (const agent::SpecPlanningError& e) {
      failure = e.what();
    } catch (const viz::ChartFailureError& e) {
      failure = e.what();
    }
    spdlog::warn("{}: {}", request_id, failure);
    doc_.failures.push_back({request_id, request, failure});
    history_.entries.push_back(EvidenceEntry{std::nullopt, failure});
    auto& text = std::get<TextElement>(doc_.elements.back()).markdown;
    text += "\n\n" + figure_unavailable_line(failure) + "\n";
  }

  void write_figure(const std::string& file, const VisualEvidence& ev) const {
    if (config_.work_dir.empty()) return;
    const auto dir = config_.work_dir / "figures";
    fs::create_directories(dir);
    const auto& bytes = *ev.image.bytes;
    util::write_file(dir / file, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  }

  const ingest::Dataset& dataset_;
  const WriterConfig& config_;
  gateway::Gateway& gateway_;
  agent::AnalysisAgent agent_;
  viz::ChartTool tool_;
  History history_;
  ReportDocument doc_;
  int request_count_ = 0;
};

}  // namespace

ReportDocument run(const ingest::Dataset& dataset, const WriterConfig& config, gateway::Gateway& gateway,
                   viz::Renderer& renderer) {
  return Run(dataset, config, gateway, renderer).execute();
}

}  // namespace chartloom::writer
