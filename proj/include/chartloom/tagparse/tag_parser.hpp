#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "chartloom/error.hpp"

namespace chartloom::tagparse {

inline constexpr std::string_view kOpenTag = "<visualization>";
inline constexpr std::string_view kCloseTag = "</visualization>";
inline constexpr std::string_view kTerminal = "<EOS>";

struct TextSegment {
  std::string content;
  bool operator==(const TextSegment&) const = default;
};
struct VizRequestSegment {
  std::string query;  // inner content, surrounding whitespace trimmed
  bool operator==(const VizRequestSegment&) const = default;
};
struct TerminalSegment {
  bool operator==(const TerminalSegment&) const = default;
};

using Segment = std::variant<TextSegment, VizRequestSegment, TerminalSegment>;

std::string describe(const Segment& segment);

// A close tag with no open tag before it.
class MalformedTagError : public Error {
public:
  MalformedTagError(std::size_t offset, std::string text_before, std::vector<Segment> emitted)
      : Error("unmatched </visualization> at byte " + std::to_string(offset)),
        offset_(offset),
        text_before_(std::move(text_before)),
        emitted_(std::move(emitted)) {}
  std::size_t offset() const { return offset_; }
  // Text buffered before the stray tag, so callers can keep it.
  const std::string& text_before() const { return text_before_; }
  // Segments completed by the failing feed() call before the stray tag.
  const std::vector<Segment>& emitted() const { return emitted_; }

private:
  std::size_t offset_;
  std::string text_before_;
  std::vector<Segment> emitted_;
};

// Stream ended inside <visualization>...; recoverable by the caller.
class TruncatedRequestError : public Error {
public:
  explicit TruncatedRequestError(std::string partial)
      : Error("stream ended inside <visualization>"), partial_(std::move(partial)) {}
  const std::string& partial() const { return partial_; }

private:
  std::string partial_;
};

// Incremental segmenter for writer output. Text is coalesced until the next
// tag (or finish), so the emitted segment list does not depend on how the
// input was chunked. Tag matching is case-sensitive; an open tag inside a
// request is literal request text; <EOS> inside a request is literal too.
// Anything after <EOS> is ignored.
class TagParser {
public:
  enum class Mode { in_text, in_request, done };

  std::vector<Segment> feed(std::string_view chunk);
  std::vector<Segment> finish();

  Mode mode() const { return mode_; }
  const std::string& pending() const { return pending_; }
  std::size_t consumed() const { return base_offset_ + pending_.size(); }

private:
  void scan(std::vector<Segment>& out);

  Mode mode_ = Mode::in_text;
  std::string pending_;
  std::size_t base_offset_ = 0;  // stream offset of pending_[0]
  std::size_t scanned_ = 0;      // prefix of pending_ known to hold no tag start
};

// Whole-string parse: feed(s) followed by finish().
std::vector<Segment> parse_all(std::string_view s);

}  // namespace chartloom::tagparse
