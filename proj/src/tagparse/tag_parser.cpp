#include "chartloom/tagparse/tag_parser.hpp"

#include <algorithm>

#include "chartloom/util/strings.hpp"

namespace chartloom::tagparse {

namespace {

struct Hit {
  std::size_t pos = std::string::npos;
  std::string_view tag;
};

Hit earliest(const std::string& s, std::size_t from, std::initializer_list<std::string_view> tags) {
  Hit best;
  for (auto tag : tags) {
    auto pos = s.find(tag, from);
    if (pos < best.pos) best = {pos, tag};
  }
  return best;
}

}  // namespace

std::string describe(const Segment& segment) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, TextSegment>) return "Text(" + s.content + ")";
        else if constexpr (std::is_same_v<T, VizRequestSegment>) return "VizRequest(" + s.query + ")";
        else return "Terminal";
      },
      segment);
}

void TagParser::scan(std::vector<Segment>& out) {
  static constexpr std::size_t kLongestTag = std::max({kOpenTag.size(), kCloseTag.size(), kTerminal.size()});

  for (;;) {
    if (mode_ == Mode::done) {
      base_offset_ += pending_.size();
      pending_.clear();
      scanned_ = 0;
      return;
    }

    if (mode_ == Mode::in_text) {
      auto hit = earliest(pending_, scanned_, {kOpenTag, kCloseTag, kTerminal});
      if (hit.pos == std::string::npos) {
        scanned_ = pending_.size() >= kLongestTag ? pending_.size() - (kLongestTag - 1) : 0;
        return;
      }
      std::string text = pending_.substr(0, hit.pos);
      if (hit.tag == kCloseTag) {
        throw MalformedTagError(base_offset_ + hit.pos, std::move(text), std::move(out));
      }
      if (!text.empty()) out.emplace_back(TextSegment{std::move(text)});
      const auto consumed = hit.pos + hit.tag.size();
      pending_.erase(0, consumed);
      base_offset_ += consumed;
      scanned_ = 0;
      if (hit.tag == kOpenTag) {
        mode_ = Mode::in_request;
      } else {
        out.emplace_back(TerminalSegment{});
        mode_ = Mode::done;
      }
      continue;
    }

    // in_request
    auto pos = pending_.find(kCloseTag, scanned_);
    if (pos == std::string::npos) {
      scanned_ = pending_.size() >= kCloseTag.size() ? pending_.size() - (kCloseTag.size() - 1) : 0;
      return;
    }
    out.emplace_back(VizRequestSegment{std::string(util::trim(std::string_view(pending_).substr(0, pos)))});
    const auto consumed = pos + kCloseTag.size();
    pending_.erase(0, consumed);
    base_offset_ += consumed;
    scanned_ = 0;
    mode_ = Mode::in_text;
  }
}

std::vector<Segment> TagParser::feed(std::string_view chunk) {
  std::vector<Segment> out;
  if (mode_ == Mode::done) {
    base_offset_ += chunk.size();
    return out;
  }
  pending_.append(chunk);
  scan(out);
  return out;
}

std::vector<Segment> TagParser::finish() {
  std::vector<Segment> out;
  switch (mode_) {
    case Mode::done:
      break;
    case Mode::in_text:
      if (!pending_.empty()) out.emplace_back(TextSegment{pending_});
      break;
    case Mode::in_request: {
      std::string partial(util::trim(pending_));
      base_offset_ += pending_.size();
      pending_.clear();
      mode_ = Mode::done;
      throw TruncatedRequestError(std::move(partial));
    }
  }
  base_offset_ += pending_.size();
  pending_.clear();
  scanned_ = 0;
  mode_ = Mode::done;
  return out;
}

std::vector<Segment> parse_all(std::string_view s) {
  TagParser parser;
  auto segments = parser.feed(s);
  auto rest = parser.finish();
  segments.insert(segments.end(), std::make_move_iterator(rest.begin()), std::make_move_iterator(rest.end()));
  return segments;
}

}  // namespace chartloom::tagparse
