#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace chartloom::gateway {

struct PromptTemplate {
  std::string id;
  std::string body;  // slots are written {name}
};

using SlotValues = std::map<std::string, std::string>;

// Throws PreconditionError for an unknown id.
const PromptTemplate& prompt_template(std::string_view id);
std::vector<std::string> template_ids();

// Slot names referenced by a template body, in first-appearance order.
std::vector<std::string> template_slots(std::string_view body);

// Single-pass substitution: slot values are inserted verbatim and never
// rescanned, so values may themselves contain braces. A missing slot throws
// PreconditionError naming it.
std::string render_prompt(std::string_view template_id, const SlotValues& slots);
std::string render_body(std::string_view body, const SlotValues& slots);

}  // namespace chartloom::gateway
