#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chartloom/ingest/table.hpp"

namespace chartloom::ingest {

struct ColumnProfile {
  std::string name;
  ColumnKind kind = ColumnKind::text;
  std::size_t null_count = 0;
  std::size_t cardinality = 0;  // distinct non-null values

  // numeric
  std::optional<double> min;
  std::optional<double> max;
  std::optional<double> mean;

  // temporal (original cell text of the extremes)
  std::optional<std::string> earliest;
  std::optional<std::string> latest;

  // categorical: most frequent values, count descending then value ascending
  std::vector<std::pair<std::string, std::size_t>> top_values;

  // text: first distinct non-null values
  std::vector<std::string> samples;
};

struct TableProfile {
  std::string table_name;
  std::size_t row_count = 0;
  std::vector<ColumnProfile> columns;
};

inline constexpr std::size_t kTopValues = 5;
inline constexpr std::size_t kTextSamples = 3;

TableProfile profile_table(const Table& table);

// One-paragraph digest of a profile for prompt slots.
std::string profile_digest(const TableProfile& profile);

}  // namespace chartloom::ingest
