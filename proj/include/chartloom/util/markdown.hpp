#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace chartloom::util {

struct ImageLink {
  std::string alt;
  std::string target;
};

// `![alt](target)` links outside code fences, in document order.
std::vector<ImageLink> scan_image_links(std::string_view markdown);

// Markdown with fenced code blocks and image links removed.
std::string strip_fences_and_images(std::string_view markdown);

// Whitespace-delimited tokens.
std::size_t count_words(std::string_view text);

}  // namespace chartloom::util
