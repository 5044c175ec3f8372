#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "chartloom/ingest/table.hpp"

namespace chartloom::ingest {

// Default number of rows shown per table in prompt snippets.
inline constexpr std::size_t kDefaultSampleRows = 5;

struct Dataset {
  std::vector<Table> tables;
  std::string source_id;
  std::string request;

  const Table* find_table(std::string_view name) const;
};

// Loads `<dir>/tables/*.csv` (sorted by file name, types inferred),
// `<dir>/request.txt`, and the optional `<dir>/meta.json`.
Dataset load_dataset(const std::filesystem::path& dir);

// Throws PreconditionError unless table names are unique and non-empty.
void validate_dataset(const Dataset& dataset);

}  // namespace chartloom::ingest
