#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace chartloom::util {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);
std::vector<std::string> split_lines(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
void replace_all(std::string& s, std::string_view from, std::string_view to);

// Shortest decimal text that reads back to the same double ("2", "34.322533").
std::string format_number(double value);

// Fixed two-decimal rendering used in summaries ("6.90", "1.45").
std::string format_fixed2(double value);

// Body of the first ``` fenced block; `found` is false when there is none.
struct FenceMatch {
  bool found = false;
  std::string info;
  std::string body;
};
FenceMatch first_fenced_block(std::string_view text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace chartloom::util
