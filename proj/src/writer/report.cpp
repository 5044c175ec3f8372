#include <fstream>

#include "chartloom/util/strings.hpp"
#include "chartloom/writer/writer.hpp"

namespace fs = std::filesystem;

namespace chartloom::writer {

namespace {

std::string stem(const std::string& file) { return fs::path(file).stem().string(); }

// Captions land inside *...*; keep stray asterisks and newlines from breaking it.
std::string caption_line(std::string_view caption) {
  std::string out;
  for (char c : caption) {
    if (c == '\n' || c == '\r') {
      out += ' ';
    } else {
      if (c == '*' || c == '_') out += '\\';
      out += c;
    }
  }
  return std::string(util::trim(out));
}

void write_bytes(const fs::path& path, const gateway::Image& image) {
  const auto& bytes = *image.bytes;
  util::write_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

}  // namespace

std::string report_markdown(const ReportDocument& doc) {
  std::vector<std::string> blocks;
  std::size_t figure = 0;
  for (const auto& element : doc.elements) {
    if (const auto* text = std::get_if<TextElement>(&element)) {
      auto t = util::trim(text->markdown);
      if (!t.empty()) blocks.emplace_back(t);
    } else {
      const auto& fig = std::get<FigureElement>(element);
      ++figure;
      blocks.push_back("![Figure " + std::to_string(figure) + "](figures/" + fig.file_name + ")\n*Figure " +
                       std::to_string(figure) + ": " + caption_line(fig.evidence.caption.text) + "*");
    }
  }
  // The writer usually opens with the outline's title; add it only when it did not.
  if (blocks.empty() || blocks.front().rfind("# ", 0) != 0) blocks.insert(blocks.begin(), "# " + doc.outline.title);
  return util::join(blocks, "\n\n") + "\n";
}

void render_markdown(const ReportDocument& doc, const fs::path& out_dir) {
  const auto figures = out_dir / "figures";
  fs::create_directories(figures);
  util::write_file(out_dir / "report.md", report_markdown(doc));

  auto evidence = nlohmann::ordered_json::array();
  for (const auto& element : doc.elements) {
    const auto* fig = std::get_if<FigureElement>(&element);
    if (!fig) continue;
    const auto& ev = fig->evidence;
    const auto spec_file = stem(fig->file_name) + ".spec.yaml";
    write_bytes(figures / fig->file_name, ev.image);
    util::write_file(figures / spec_file, agent::serialize_spec(ev.spec));
    if (!ev.candidate_images.empty()) {
      fs::create_directories(figures / "candidates");
      for (std::size_t i = 0; i < ev.candidate_images.size(); ++i) {
        write_bytes(figures / "candidates" /
                        (stem(fig->file_name) + "_stage" + std::to_string(ev.candidate_stages.at(i)) + ".png"),
                    ev.candidate_images[i]);
      }
    }
    nlohmann::ordered_json item;
    item["figure"] = "figures/" + fig->file_name;
    item["request_id"] = ev.request_id;
    item["request"] = ev.request;
    item["intent"] = ev.intent;
    item["title"] = ev.spec.title;
    item["spec_path"] = "figures/" + spec_file;
    item["caption"] = ev.caption.text;
    item["caption_fallback"] = ev.caption.fallback;
    item["candidate_stages"] = ev.candidate_stages;
    item["selected_stage"] = ev.selected_stage;
    evidence.push_back(std::move(item));
  }
  auto failures = nlohmann::ordered_json::array();
  for (const auto& f : doc.failures) {
    failures.push_back({{"request_id", f.request_id}, {"request", f.request}, {"reason", f.reason}});
  }
  nlohmann::ordered_json evidence_doc;
  evidence_doc["figures"] = std::move(evidence);
  evidence_doc["failures"] = std::move(failures);
  util::write_file(out_dir / "evidence.json", evidence_doc.dump(2) + "\n");

  {
    std::ofstream out(out_dir / "transcript.jsonl", std::ios::binary);
    if (!out) throw IoError("cannot write " + (out_dir / "transcript.jsonl").string());
    for (const auto& call : doc.calls) out << gateway::to_json(call).dump() << '\n';
  }

  nlohmann::ordered_json meta;
  meta["source_id"] = doc.source_id;
  meta["config"] = doc.config_snapshot;
  meta["api_calls"] = doc.api_calls;
  meta["total_model_latency_ms"] = doc.total_latency_ms;
  meta["wall_clock_s"] = doc.wall_clock_s;
  meta["steps"] = doc.steps;
  meta["termination"] = doc.termination;
  meta["figures"] = doc.figure_count();
  meta["failed_requests"] = doc.failures.size();
  meta["overview_degraded"] = doc.overview.degraded;
  util::write_file(out_dir / "run_meta.json", meta.dump(2) + "\n");
}

}  // namespace chartloom::writer
