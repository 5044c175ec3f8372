#include <algorithm>
#include <limits>
#include <random>
#include <regex>
#include <set>

#include <spdlog/spdlog.h>

#include "chartloom/eval/eval.hpp"
#include "chartloom/gateway/prompts.hpp"
#include "chartloom/util/strings.hpp"

namespace fs = std::filesystem;

namespace chartloom::eval {

using gateway::CompletionRequest;
using gateway::Message;
using gateway::MessageRole;

std::string_view to_string(MetricLevel level) {
  switch (level) {
    case MetricLevel::chart: return "chart";
    case MetricLevel::chapter: return "chapter";
    case MetricLevel::report: return "report";
  }
  return "?";
}

const std::vector<MetricId>& all_metrics() {
  static const std::vector<MetricId> metrics = {
      {"read", MetricLevel::chart},     {"layout", MetricLevel::chart}, {"tc_cons", MetricLevel::chapter},
      {"depth", MetricLevel::chapter},  {"info", MetricLevel::report},  {"vis_cons", MetricLevel::report},
  };
  return metrics;
}

std::optional<MetricId> parse_metric(std::string_view id) {
  for (const auto& m : all_metrics()) {
    if (m.id == id) return m;
  }
  return std::nullopt;
}

std::string metric_ids() {
  std::vector<std::string> ids;
  for (const auto& m : all_metrics()) ids.push_back(m.id);
  return util::join(ids, ", ");
}

std::vector<std::string> judge_labels(std::size_t count) {
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < count; ++i) {
    std::string label;
    for (std::size_t n = i + 1; n > 0; n = (n - 1) / 26) label.insert(label.begin(), static_cast<char>('A' + (n - 1) % 26));
    labels.push_back(label);
  }
  return labels;
}

namespace {

std::optional<std::vector<std::string>> ranking_from(std::string_view line, const std::vector<std::string>& labels) {
  std::vector<std::string> order;
  for (auto part : util::split(line, '>')) {
    std::string token(util::trim(part));
    // Tolerate "**B**", "`B`", "Report B", "B." and similar decoration.
    token.erase(std::remove_if(token.begin(), token.end(), [](char c) { return c == '*' || c == '`' || c == '"' || c == '\'' || c == '[' || c == ']'; }),
                token.end());
    token = std::string(util::trim(token));
    if (util::to_lower(token).rfind("report ", 0) == 0) token = std::string(util::trim(token.substr(7)));
    while (!token.empty() && (token.back() == '.' || token.back() == ',')) token.pop_back();
    order.push_back(token);
  }
  if (order.size() != labels.size()) return std::nullopt;
  std::set<std::string> seen(order.begin(), order.end());
  std::set<std::string> expected(labels.begin(), labels.end());
  if (seen != expected) return std::nullopt;
  return order;
}

}  // namespace

std::optional<std::vector<std::string>> parse_ranking(std::string_view reply, const std::vector<std::string>& labels) {
  auto lines = util::split_lines(reply);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    auto line = util::trim(*it);
    auto lower = util::to_lower(line);
    auto pos = lower.find("ranking:");
    if (pos != std::string::npos) return ranking_from(line.substr(pos + 8), labels);
  }
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    auto line = util::trim(*it);
    if (!line.empty()) return ranking_from(line, labels);
  }
  return std::nullopt;
}

std::vector<std::size_t> label_permutation(std::uint64_t seed, std::string_view instance_id, std::size_t count) {
  // FNV-1a over the instance id keeps instances independent under one seed.
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : instance_id) h = (h ^ c) * 1099511628211ull;
  std::mt19937_64 rng(seed ^ h);
  std::vector<std::size_t> perm(count);
  for (std::size_t i = 0; i < count; ++i) perm[i] = i;
  // Own Fisher-Yates: std::shuffle's draw sequence is not portable.
  for (std::size_t i = count; i > 1; --i) {
    const std::uint64_t bound = i;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r;
    do r = rng();
    while (r >= limit);
    std::swap(perm[i - 1], perm[r % bound]);
  }
  return perm;
}

namespace {

struct Piece {
  std::string text;
  std::optional<fs::path> image;
};

std::vector<Piece> load_pieces(const fs::path& dir) {
  const auto md = util::read_file((dir / "report.md").string());
  static const std::regex kImage(R"(!\[[^\]]*\]\(([^)\s]+)[^)]*\))");
  std::vector<Piece> pieces;
  std::string text;
  for (const auto& line : util::split_lines(md)) {
    std::smatch m;
    std::string rest = line;
    while (std::regex_search(rest, m, kImage)) {
      text += m.prefix().str();
      pieces.push_back({text, dir / m[1].str()});
      text.clear();
      rest = m.suffix().str();
    }
    text += rest + "\n";
  }
  pieces.push_back({text, std::nullopt});
  return pieces;
}

gateway::Image load_image(const fs::path& path) {
  auto bytes = util::read_file(path.string());
  return gateway::Image::png(gateway::Bytes(bytes.begin(), bytes.end()));
}

void append_report(Message& msg, const fs::path& dir, MetricLevel level) {
  const auto pieces = load_pieces(dir);
  switch (level) {
    case MetricLevel::chart: {
      bool any = false;
      for (const auto& p : pieces) {
        if (!p.image) continue;
        msg.parts.emplace_back(load_image(*p.image));
        any = true;
      }
      if (!any) msg.parts.emplace_back(std::string("(no charts)\n"));
      break;
    }
    case MetricLevel::chapter: {
      std::size_t pair = 0;
      for (const auto& p : pieces) {
        if (!p.image) continue;
        msg.parts.emplace_back("#### Pair " + std::to_string(++pair) + "\n" + std::string(util::trim(p.text)) + "\n");
        msg.parts.emplace_back(load_image(*p.image));
      }
      if (pair == 0) msg.parts.emplace_back("(no text-chart pairs)\n" + std::string(util::trim(pieces.back().text)) + "\n");
      break;
    }
    case MetricLevel::report:
      for (const auto& p : pieces) {
        if (!util::trim(p.text).empty()) msg.parts.emplace_back(std::string(util::trim(p.text)) + "\n");
        if (p.image) msg.parts.emplace_back(load_image(*p.image));
      }
      break;
  }
}

}  // namespace

CompletionRequest judge_request(const std::vector<ReportBundle>& reports, const MetricId& metric,
                                const std::vector<std::size_t>& permutation) {
  const auto labels = judge_labels(reports.size());
  CompletionRequest req;
  req.model_role = gateway::ModelRole::vision;
  req.template_id = "judge." + metric.id;
  Message msg;
  msg.role = MessageRole::user;
  msg.parts.emplace_back(gateway::render_prompt(req.template_id, {{"labels", util::join(labels, ", ")}}));
  for (std::size_t i = 0; i < permutation.size(); ++i) {
    msg.parts.emplace_back("\n### Report ID: " + labels[i] + "\n");
    append_report(msg, reports.at(permutation[i]).dir, metric.level);
  }
  req.messages.push_back(std::move(msg));
  return req;
}

RankingRecord judge_rank(const std::string& instance_id, const std::vector<ReportBundle>& reports,
                         const MetricId& metric, gateway::Gateway& gateway, std::uint64_t seed) {
  if (reports.size() < 2) throw PreconditionError("judging needs at least two reports");
  std::set<std::string> methods;
  for (const auto& r : reports) {
    if (!methods.insert(r.method_id).second) throw PreconditionError("duplicate method id '" + r.method_id + "'");
  }

  const auto labels = judge_labels(reports.size());
  const auto perm = label_permutation(seed, instance_id, reports.size());
  auto req = judge_request(reports, metric, perm);

  for (int attempt = 0; attempt < 2; ++attempt) {
    auto reply = gateway.complete_multimodal(req).text;
    if (auto order = parse_ranking(reply, labels)) {
      RankingRecord record{instance_id, metric.id, {}};
      for (std::size_t rank = 0; rank < order->size(); ++rank) {
        auto label_index = static_cast<std::size_t>(std::find(labels.begin(), labels.end(), (*order)[rank]) - labels.begin());
        record.ranks[reports[perm[label_index]].method_id] = static_cast<int>(rank + 1);
      }
      return record;
    }
    spdlog::warn("instance {}: judge reply has no valid ranking{}", instance_id, attempt == 0 ? "; asking again" : "");
    req.messages.push_back(Message::text(MessageRole::assistant, reply));
    req.messages.push_back(Message::text(
        MessageRole::user, "Your reply did not end with a valid ranking. Reply again and end with one line:\nRANKING: " +
                               util::join(labels, " > ") + "\nreordered from best to worst, using every Report ID once."));
  }
  throw JudgeError("instance " + instance_id + ": judge produced no valid ranking for " + metric.id);
}

double average_rank(const std::vector<RankingRecord>& records, const std::string& method_id) {
  if (records.empty()) throw PreconditionError("average_rank over no records");
  double sum = 0;
  for (const auto& r : records) {
    auto it = r.ranks.find(method_id);
    if (it == r.ranks.end()) throw PreconditionError("instance " + r.instance_id + " has no rank for '" + method_id + "'");
    sum += it->second;
  }
  return sum / static_cast<double>(records.size());
}

std::vector<RankSummaryRow> summarize(const std::vector<RankingRecord>& records) {
  std::map<std::string, std::vector<RankingRecord>> by_metric;
  for (const auto& r : records) by_metric[r.metric].push_back(r);
  std::vector<RankSummaryRow> rows;
  for (const auto& [metric, recs] : by_metric) {
    std::set<std::string> methods;
    for (const auto& r : recs) {
      for (const auto& [m, _] : r.ranks) methods.insert(m);
    }
    for (const auto& m : methods) rows.push_back({metric, m, average_rank(recs, m)});
  }
  return rows;
}

void write_ranks_json(const std::vector<RankingRecord>& records, const fs::path& path) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    nlohmann::ordered_json ranks = nlohmann::ordered_json::object();
    for (const auto& [m, rank] : r.ranks) ranks[m] = rank;
    out.push_back({{"instance_id", r.instance_id}, {"metric", r.metric}, {"ranks", ranks}});
  }
  util::write_file(path.string(), out.dump(2) + "\n");
}

void write_rank_summary_csv(const std::vector<RankSummaryRow>& rows, const fs::path& path) {
  std::string out = "metric,method,mean_rank\n";
  for (const auto& r : rows) out += r.metric + "," + r.method + "," + util::format_number(r.mean_rank) + "\n";
  util::write_file(path.string(), out);
}

}  // namespace chartloom::eval
