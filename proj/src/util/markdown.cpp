#include "chartloom/util/markdown.hpp"

#include <cctype>

#include "chartloom/util/strings.hpp"

namespace chartloom::util {

namespace {

bool is_fence(std::string_view line) {
  auto t = trim(line);
  return t.substr(0, 3) == "```" || t.substr(0, 3) == "~~~";
}

// Calls `on_image` for every image link and `on_text` for the text between
// them, skipping fenced blocks entirely.
template <typename OnText, typename OnImage>
void walk(std::string_view md, OnText on_text, OnImage on_image) {
  bool in_fence = false;
  for (const auto& line : split_lines(md)) {
    if (is_fence(line)) {
      in_fence = !in_fence;
      continue;
    }
    if (in_fence) continue;
    std::size_t pos = 0;
    while (pos < line.size()) {
      auto bang = line.find("![", pos);
      if (bang == std::string::npos) break;
      auto close = line.find("](", bang + 2);
      auto end = close == std::string::npos ? std::string::npos : line.find(')', close + 2);
      if (close == std::string::npos || end == std::string::npos || line.find(']', bang + 2) != close) {
        on_text(std::string_view(line).substr(pos, bang + 2 - pos));
        pos = bang + 2;
        continue;
      }
      on_text(std::string_view(line).substr(pos, bang - pos));
      on_image(ImageLink{line.substr(bang + 2, close - bang - 2), line.substr(close + 2, end - close - 2)});
      pos = end + 1;
    }
    on_text(std::string_view(line).substr(std::min(pos, line.size())));
    on_text("\n");
  }
}

}  // namespace

std::vector<ImageLink> scan_image_links(std::string_view markdown) {
  std::vector<ImageLink> links;
  walk(markdown, [](std::string_view) {}, [&](ImageLink link) { links.push_back(std::move(link)); });
  return links;
}

std::string strip_fences_and_images(std::string_view markdown) {
  std::string out;
  walk(markdown, [&](std::string_view s) { out += s; }, [&](const ImageLink&) { out += ' '; });
  return out;
}

std::size_t count_words(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    bool space = std::isspace(static_cast<unsigned char>(c));
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

}  // namespace chartloom::util
