#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace chartloom::ingest {

enum class ColumnKind { numeric, categorical, temporal, text };

std::string_view to_string(ColumnKind kind);

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::text;
};

// Cells keep their original text; nullness is a view over that text so a
// loaded table can be written back unchanged.
using Row = std::vector<std::string>;

struct Table {
  std::string name;
  std::vector<Column> columns;
  std::vector<Row> rows;

  std::size_t row_count() const { return rows.size(); }
  std::optional<std::size_t> column_index(std::string_view column) const;
};

// Empty, "NA", "N/A" and "null" (any case) are null.
bool is_null(std::string_view cell);

std::optional<double> parse_number(std::string_view cell);
// Accepts ISO-like dates (YYYY-MM-DD, YYYY-MM, YYYY/MM/DD) with an optional
// time part, and US-style MM/DD/YYYY. Returns a sortable key.
std::optional<std::string> parse_date(std::string_view cell);

// Reads a comma-separated file with a header row. All columns come back as
// text; run infer_column_types afterwards.
Table load_table(const std::filesystem::path& path);
Table parse_table(std::string_view name, std::string_view csv_text);

Table infer_column_types(Table table);

// Header plus the first min(k, row_count) rows as CSV lines.
std::string sample_rows(const Table& table, std::size_t k);

// Full CSV serialization (header + every row), quoting where needed.
std::string serialize_csv(const Table& table);

}  // namespace chartloom::ingest
