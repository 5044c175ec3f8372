#include "chartloom/ingest/table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "chartloom/error.hpp"
#include "chartloom/util/strings.hpp"

namespace chartloom::ingest {

namespace {

constexpr double kKindThreshold = 0.95;
constexpr std::size_t kMinCategoricalCardinality = 20;
constexpr double kCategoricalFraction = 0.05;

bool is_digit(char c) { return c >= '0' && c <= '9'; }

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), is_digit);
}

// RFC 4180 reader. Quoted fields may contain separators, quotes ("") and
// newlines. Returns records with their 1-based starting line.
struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;
};

std::vector<CsvRecord> read_records(std::string_view text) {
  if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  std::vector<CsvRecord> records;
  CsvRecord current;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  current.line = 1;

  auto end_field = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // Blank lines are skipped rather than treated as one-column rows.
    if (!(current.fields.size() == 1 && current.fields[0].empty())) {
      records.push_back(std::move(current));
    }
    current = CsvRecord{};
    current.line = line;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field_started && field.empty()) {
          in_quotes = true;
          field_started = true;
        } else {
          field += c;
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        ++line;
        end_record();
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field starting near line " + std::to_string(current.line));
  if (!field.empty() || !current.fields.empty()) end_record();
  return records;
}

std::string quote_cell(std::string_view cell) {
  if (cell.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(cell);
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void append_csv_line(std::string& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += quote_cell(cells[i]);
  }
  out += '\n';
}

bool name_is_date_word(std::string_view column) {
  static constexpr std::string_view kWords[] = {"year", "date", "month", "time"};
  auto lowered = util::to_lower(column);
  return std::any_of(std::begin(kWords), std::end(kWords),
                     [&](std::string_view w) { return lowered.find(w) != std::string::npos; });
}

}  // namespace

std::string_view to_string(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::numeric: return "numeric";
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::temporal: return "temporal";
    case ColumnKind::text: return "text";
  }
  return "text";
}

std::optional<std::size_t> Table::column_index(std::string_view column) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == column) return i;
  }
  return std::nullopt;
}

bool is_null(std::string_view cell) {
  auto t = util::trim(cell);
  return t.empty() || util::iequals(t, "NA") || util::iequals(t, "N/A") || util::iequals(t, "null");
}

std::optional<double> parse_number(std::string_view cell) {
  auto t = util::trim(cell);
  if (!t.empty() && t.front() == '+') t.remove_prefix(1);
  if (t.empty()) return std::nullopt;
  double value = 0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::optional<std::string> parse_date(std::string_view cell) {
  auto t = util::trim(cell);
  // Drop a time component ("2021-03-04T10:00", "2021-03-04 10:00:00").
  auto split_at = t.find_first_of("T ");
  std::string_view date = split_at == std::string_view::npos ? t : t.substr(0, split_at);
  std::string_view time = split_at == std::string_view::npos ? std::string_view{} : t.substr(split_at + 1);
  if (!time.empty()) {
    if (time.size() < 4 || !is_digit(time[0]) || time.find(':') == std::string_view::npos) return std::nullopt;
  }

  auto valid = [](int y, int m, int d) {
    return y >= 1 && y <= 9999 && m >= 1 && m <= 12 && d >= 1 && d <= 31;
  };
  auto key = [&](int y, int m, int d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
    return std::string(buf) + (time.empty() ? "" : "T" + std::string(time));
  };

  for (char sep : {'-', '/'}) {
    auto parts = util::split(date, sep);
    if (parts.size() < 2 || parts.size() > 3) continue;
    if (!std::all_of(parts.begin(), parts.end(), [](const std::string& p) { return all_digits(p); })) continue;
    if (parts[0].size() == 4) {
      int y = std::stoi(parts[0]);
      int m = std::stoi(parts[1]);
      int d = parts.size() == 3 ? std::stoi(parts[2]) : 1;
      if (parts[1].size() <= 2 && (parts.size() == 2 || parts[2].size() <= 2) && valid(y, m, d)) return key(y, m, d);
    } else if (sep == '/' && parts.size() == 3 && parts[2].size() == 4 && parts[0].size() <= 2 &&
               parts[1].size() <= 2) {
      int m = std::stoi(parts[0]);
      int d = std::stoi(parts[1]);
      int y = std::stoi(parts[2]);
      if (valid(y, m, d)) return key(y, m, d);
    }
  }
  return std::nullopt;
}

Table parse_table(std::string_view name, std::string_view csv_text) {
  auto records = read_records(csv_text);
  if (records.empty()) throw ParseError("table '" + std::string(name) + "': missing header row");

  Table table;
  table.name = std::string(name);
  std::set<std::string> seen;
  for (auto& header : records.front().fields) {
    std::string col(util::trim(header));
    if (col.empty()) throw ParseError("table '" + table.name + "': empty column name in header");
    if (!seen.insert(col).second) throw ParseError("table '" + table.name + "': duplicate column '" + col + "'");
    table.columns.push_back({col, ColumnKind::text});
  }

  table.rows.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    auto& fields = records[r].fields;
    if (fields.size() != table.columns.size()) {
      throw ParseError("table '" + table.name + "': row " + std::to_string(r) + " (line " +
                       std::to_string(records[r].line) + ") has " + std::to_string(fields.size()) +
                       " fields, expected " + std::to_string(table.columns.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  return table;
}

Table load_table(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ParseError("missing table file: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot read table file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_table(path.stem().string(), ss.str());
}

Table infer_column_types(Table table) {
  const std::size_t n = table.row_count();
  const std::size_t categorical_limit =
      std::max(kMinCategoricalCardinality, static_cast<std::size_t>(kCategoricalFraction * static_cast<double>(n)));

  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    std::size_t non_null = 0, numeric = 0, dates = 0;
    std::unordered_set<std::string> distinct;
    for (const auto& row : table.rows) {
      const auto& cell = row[c];
      if (is_null(cell)) continue;
      ++non_null;
      if (parse_number(cell)) ++numeric;
      if (parse_date(cell)) ++dates;
      distinct.insert(std::string(util::trim(cell)));
    }

    auto& column = table.columns[c];
    const double denom = static_cast<double>(non_null);
    if (non_null == 0) {
      column.kind = ColumnKind::text;
    } else if (static_cast<double>(numeric) >= kKindThreshold * denom) {
      column.kind = name_is_date_word(column.name) ? ColumnKind::temporal : ColumnKind::numeric;
    } else if (static_cast<double>(dates) >= kKindThreshold * denom) {
      column.kind = ColumnKind::temporal;
    } else if (distinct.size() <= categorical_limit) {
      column.kind = ColumnKind::categorical;
    } else {
      column.kind = ColumnKind::text;
    }
  }
  return table;
}

std::string sample_rows(const Table& table, std::size_t k) {
  std::string out;
  std::vector<std::string> header;
  header.reserve(table.columns.size());
  for (const auto& col : table.columns) header.push_back(col.name);
  append_csv_line(out, header);
  const std::size_t limit = std::min(k, table.row_count());
  for (std::size_t r = 0; r < limit; ++r) append_csv_line(out, table.rows[r]);
  return out;
}

std::string serialize_csv(const Table& table) { return sample_rows(table, table.row_count()); }

}  // namespace chartloom::ingest
