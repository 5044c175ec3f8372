#include <doctest.h>

#include <cctype>
#include <functional>
#include <random>

#include "chartloom/tagparse/tag_parser.hpp"
#include "chartloom/util/strings.hpp"

using namespace chartloom;
using namespace chartloom::tagparse;

namespace {

using Segs = std::vector<Segment>;

Segs chunked(std::string_view s, const std::vector<std::size_t>& cuts) {
  TagParser p;
  Segs out;
  std::size_t prev = 0;
  for (auto c : cuts) {
    auto got = p.feed(s.substr(prev, c - prev));
    out.insert(out.end(), got.begin(), got.end());
    prev = c;
  }
  auto got = p.feed(s.substr(prev));
  out.insert(out.end(), got.begin(), got.end());
  got = p.finish();
  out.insert(out.end(), got.begin(), got.end());
  return out;
}

// Outcome as a comparable string: segments, or the error kind.
std::string outcome(const std::function<Segs()>& fn) {
  try {
    std::string s;
    for (const auto& seg : fn()) s += describe(seg) + "|";
    return s;
  } catch (const MalformedTagError& e) {
    return "malformed@" + std::to_string(e.offset());
  } catch (const TruncatedRequestError& e) {
    return "truncated:" + e.partial();
  }
}

std::string random_writer_text(std::mt19937_64& rng) {
  static const std::vector<std::string> pieces = {
      "Intro ", "text", " ", "\n", "<visualization>", "</visualization>", "<EOS>", "plot sales", "<", ">",
      "</", "<visu", "alization>", "<EO", "S>", "Visualization", "<VISUALIZATION>", "/"};
  std::string s;
  const int n = std::uniform_int_distribution<int>(0, 14)(rng);
  for (int i = 0; i < n; ++i) s += pieces[std::uniform_int_distribution<std::size_t>(0, pieces.size() - 1)(rng)];
  return s;
}

std::vector<std::size_t> random_cuts(std::mt19937_64& rng, std::size_t len) {
  std::vector<std::size_t> cuts;
  if (len == 0) return cuts;
  const int n = std::uniform_int_distribution<int>(0, static_cast<int>(std::min<std::size_t>(len, 12)))(rng);
  for (int i = 0; i < n; ++i) cuts.push_back(std::uniform_int_distribution<std::size_t>(0, len)(rng));
  std::sort(cuts.begin(), cuts.end());
  return cuts;
}

}  // namespace

TEST_SUITE("tagparse") {
  TEST_CASE("single chunk with request and terminal") {
    auto segs = parse_all("Intro <visualization>plot sales</visualization> done<EOS>");
    CHECK(segs == Segs{TextSegment{"Intro "}, VizRequestSegment{"plot sales"}, TextSegment{" done"}, TerminalSegment{}});
  }

  TEST_CASE("tag split across chunks") {
    CHECK(chunked("abc <visualization>q</visualization>", {9}) == parse_all("abc <visualization>q</visualization>"));
    CHECK(parse_all("abc <visualization>q</visualization>") == Segs{TextSegment{"abc "}, VizRequestSegment{"q"}});
  }

  TEST_CASE("no tags") {
    CHECK(parse_all("plain text only") == Segs{TextSegment{"plain text only"}});
    CHECK(parse_all("").empty());
    TagParser p;
    CHECK(p.finish().empty());
  }

  TEST_CASE("pending text is flushed by finish") {
    TagParser p;
    CHECK(p.feed("tail").empty());
    CHECK(p.mode() == TagParser::Mode::in_text);
    CHECK(p.finish() == Segs{TextSegment{"tail"}});
  }

  TEST_CASE("request whitespace is trimmed") {
    CHECK(parse_all("<visualization>\n  revenue by month \n</visualization>") ==
          Segs{VizRequestSegment{"revenue by month"}});
  }

  TEST_CASE("unclosed request at end of stream") {
    TagParser p;
    p.feed("a <visualization>half a requ");
    CHECK(p.mode() == TagParser::Mode::in_request);
    try {
      p.finish();
      FAIL("expected TruncatedRequestError");
    } catch (const TruncatedRequestError& e) {
      CHECK(e.partial() == "half a requ");
    }
  }

  TEST_CASE("stray close tag is malformed and keeps the text before it") {
    try {
      parse_all("before </visualization> after");
      FAIL("expected MalformedTagError");
    } catch (const MalformedTagError& e) {
      CHECK(e.offset() == 7);
      CHECK(e.text_before() == "before ");
    }
    try {
      parse_all("<visualization>a</visualization>x</visualization>");
      FAIL("expected MalformedTagError");
    } catch (const MalformedTagError& e) {
      CHECK(e.emitted() == Segs{VizRequestSegment{"a"}});
      CHECK(e.text_before() == "x");
    }
  }

  TEST_CASE("text after the terminal is ignored") {
    TagParser p;
    auto segs = p.feed("end <EOS> junk <visualization>x</visualization>");
    CHECK(segs == Segs{TextSegment{"end "}, TerminalSegment{}});
    CHECK(p.mode() == TagParser::Mode::done);
    CHECK(p.feed("more </visualization>").empty());
    CHECK(p.finish().empty());
  }

  TEST_CASE("nested open tag and EOS inside a request are literal") {
    CHECK(parse_all("<visualization>a <visualization> b <EOS> c</visualization>") ==
          Segs{VizRequestSegment{"a <visualization> b <EOS> c"}});
  }

  TEST_CASE("matching is case-sensitive") {
    CHECK(parse_all("<Visualization>x</Visualization><eos>") == Segs{TextSegment{"<Visualization>x</Visualization><eos>"}});
  }

  TEST_CASE("partial tag prefixes at a chunk end are held back") {
    TagParser p;
    CHECK(p.feed("abc <vis").empty());
    CHECK(p.feed("ual").empty());
    auto segs = p.feed("ly fine");
    CHECK(segs.empty());
    CHECK(p.finish() == Segs{TextSegment{"abc <visually fine"}});
  }

  TEST_CASE("chunking invariance over random partitions") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 3000; ++i) {
      const auto s = random_writer_text(rng);
      const auto whole = outcome([&] { return parse_all(s); });
      for (int k = 0; k < 4; ++k) {
        auto cuts = random_cuts(rng, s.size());
        INFO("input: " << s);
        CHECK(outcome([&] { return chunked(s, cuts); }) == whole);
      }
      // Byte-at-a-time is the hardest partition.
      std::vector<std::size_t> every(s.size());
      for (std::size_t j = 0; j < s.size(); ++j) every[j] = j;
      CHECK(outcome([&] { return chunked(s, every); }) == whole);
    }
  }

  TEST_CASE("reconstruction and ordering") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 3000; ++i) {
      const auto s = random_writer_text(rng);
      Segs segs;
      try {
        segs = parse_all(s);
      } catch (const Error&) {
        continue;
      }
      std::string rebuilt;
      for (std::size_t j = 0; j < segs.size(); ++j) {
        if (const auto* t = std::get_if<TextSegment>(&segs[j])) {
          rebuilt += t->content;
        } else if (const auto* r = std::get_if<VizRequestSegment>(&segs[j])) {
          rebuilt += std::string(kOpenTag) + r->query + std::string(kCloseTag);
        } else {
          rebuilt += std::string(kTerminal);
          CHECK(j + 1 == segs.size());
        }
        if (j > 0) {
          // Text is coalesced: never two text segments in a row.
          CHECK_FALSE((std::holds_alternative<TextSegment>(segs[j]) && std::holds_alternative<TextSegment>(segs[j - 1])));
        }
      }
      // Equal up to whitespace trimmed inside requests and anything after <EOS>.
      auto strip = [](std::string x) {
        std::string out;
        for (char c : x)
          if (!std::isspace(static_cast<unsigned char>(c))) out += c;
        return out;
      };
      if (!segs.empty() && std::holds_alternative<TerminalSegment>(segs.back())) {
        CHECK(strip(s).rfind(strip(rebuilt), 0) == 0);
      } else {
        CHECK(strip(rebuilt) == strip(s));
      }
    }
  }
}
