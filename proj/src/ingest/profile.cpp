#include "chartloom/ingest/profile.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "chartloom/util/strings.hpp"

namespace chartloom::ingest {

namespace {

void profile_numeric(const Table& table, std::size_t c, ColumnProfile& out) {
  double sum = 0;
  std::size_t count = 0;
  for (const auto& row : table.rows) {
    if (is_null(row[c])) continue;
    auto v = parse_number(row[c]);
    if (!v) continue;
    out.min = out.min ? std::min(*out.min, *v) : *v;
    out.max = out.max ? std::max(*out.max, *v) : *v;
    sum += *v;
    ++count;
  }
  if (count) {
    double mean = sum / static_cast<double>(count);
    // Rounding can push the mean a hair outside [min, max] for constant columns.
    out.mean = std::clamp(mean, *out.min, *out.max);
  }
}

void profile_temporal(const Table& table, std::size_t c, ColumnProfile& out) {
  // Year-like columns are typed temporal but hold plain numbers.
  std::optional<std::pair<std::string, std::string>> lo, hi;  // (sort key, original)
  for (const auto& row : table.rows) {
    if (is_null(row[c])) continue;
    std::string original(util::trim(row[c]));
    std::string key;
    if (auto d = parse_date(original)) {
      key = *d;
    } else if (auto n = parse_number(original)) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%020.6f", *n);
      key = buf;
    } else {
      continue;
    }
    if (!lo || key < lo->first) lo = {key, original};
    if (!hi || key > hi->first) hi = {key, original};
  }
  if (lo) out.earliest = lo->second;
  if (hi) out.latest = hi->second;
}

}  // namespace

TableProfile profile_table(const Table& table) {
  TableProfile profile;
  profile.table_name = table.name;
  profile.row_count = table.row_count();

  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    ColumnProfile col;
    col.name = table.columns[c].name;
    col.kind = table.columns[c].kind;

    std::map<std::string, std::size_t> freq;
    std::vector<std::string> first_seen;
    for (const auto& row : table.rows) {
      if (is_null(row[c])) {
        ++col.null_count;
        continue;
      }
      std::string value(util::trim(row[c]));
      if (freq[value]++ == 0) first_seen.push_back(value);
    }
    col.cardinality = freq.size();

    switch (col.kind) {
      case ColumnKind::numeric:
        profile_numeric(table, c, col);
        break;
      case ColumnKind::temporal:
        profile_temporal(table, c, col);
        break;
      case ColumnKind::categorical: {
        std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        ranked.resize(std::min(ranked.size(), kTopValues));
        col.top_values = std::move(ranked);
        break;
      }
      case ColumnKind::text:
        first_seen.resize(std::min(first_seen.size(), kTextSamples));
        col.samples = std::move(first_seen);
        break;
    }
    profile.columns.push_back(std::move(col));
  }
  return profile;
}

std::string profile_digest(const TableProfile& profile) {
  std::string out = "Table `" + profile.table_name + "` (" + std::to_string(profile.row_count) + " rows)\n";
  for (const auto& col : profile.columns) {
    out += "- " + col.name + " [" + std::string(to_string(col.kind)) + "]";
    switch (col.kind) {
      case ColumnKind::numeric:
        if (col.mean) {
          out += " min=" + util::format_number(*col.min) + ", max=" + util::format_number(*col.max) +
                 ", mean=" + util::format_number(*col.mean);
        }
        break;
      case ColumnKind::temporal:
        if (col.earliest) out += " range " + *col.earliest + " .. " + *col.latest;
        break;
      case ColumnKind::categorical: {
        out += " " + std::to_string(col.cardinality) + " distinct; top:";
        for (const auto& [value, count] : col.top_values) out += " " + value + " (" + std::to_string(count) + ")";
        break;
      }
      case ColumnKind::text:
        if (!col.samples.empty()) out += " e.g. " + util::join(col.samples, " | ");
        break;
    }
    if (col.null_count) out += ", nulls=" + std::to_string(col.null_count);
    out += "\n";
  }
  return out;
}

}  // namespace chartloom::ingest
