#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "chartloom/error.hpp"
#include "chartloom/ingest/dataset.hpp"

namespace chartloom::agent {

using Value = nlohmann::ordered_json;

inline constexpr std::size_t kMaxSpecRecords = 500;

// The yaml bridge between a natural-language request and plotting code:
//
//   chart_type: line_chart
//   title: ...
//   data:            # self-contained, pre-aggregated records
//     - Year: 2000
//       Share: 34.3
//   labels:          # axis labels, annotations, legend, reference lines
//     x_axis_label: Year
//
// `ref_tables` records which source tables the data came from. Keys other
// than these five are kept in `extra` and handed through to code generation.
struct VisualizationSpec {
  std::string chart_type;
  std::string title;
  std::vector<Value> data;  // each an object; identical key sets
  Value labels = Value::object();
  std::vector<std::string> ref_tables;
  Value extra = Value::object();

  std::vector<std::string> field_names() const;
  // Looks up `<axis>_axis_label`, then `<axis>_axis`.
  std::optional<std::string> axis_label(char axis) const;
  std::optional<std::string> label_string(std::string_view key) const;
  std::vector<std::string> annotation_texts() const;

  bool operator==(const VisualizationSpec& other) const;
};

class SpecValidationError : public Error {
public:
  SpecValidationError(std::string key, const std::string& detail)
      : Error("visualization spec: " + key + ": " + detail), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

private:
  std::string key_;
};

// Parses a yaml document (optionally wrapped in ``` or """ fences). Plain
// scalars containing ": " (common in model output, e.g. titles) are
// tolerated. Throws ParseError for unreadable yaml and SpecValidationError
// for contract violations.
VisualizationSpec parse_spec(std::string_view text);
void validate_spec(const VisualizationSpec& spec);
std::string serialize_spec(const VisualizationSpec& spec);

// Tables whose column names cover at least one data field, in dataset order.
std::vector<std::string> infer_ref_tables(const VisualizationSpec& spec, const ingest::Dataset& dataset);

// Data values that do not occur in any referenced table (numbers compared
// with a relative tolerance, strings exactly). Empty means fully grounded.
std::vector<std::string> ungrounded_values(const VisualizationSpec& spec, const ingest::Dataset& dataset);

}  // namespace chartloom::agent
