#include "chartloom/ingest/dataset.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "chartloom/error.hpp"
#include "chartloom/util/strings.hpp"

namespace fs = std::filesystem;

namespace chartloom::ingest {

const Table* Dataset::find_table(std::string_view name) const {
  auto it = std::find_if(tables.begin(), tables.end(), [&](const Table& t) { return t.name == name; });
  return it == tables.end() ? nullptr : &*it;
}

Dataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("dataset directory not found: " + dir.string());
  const auto tables_dir = dir / "tables";
  if (!fs::is_directory(tables_dir)) throw ConfigError("missing tables directory: " + tables_dir.string());

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(tables_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  Dataset dataset;
  for (const auto& file : files) dataset.tables.push_back(infer_column_types(load_table(file)));

  const auto request_path = dir / "request.txt";
  if (fs::exists(request_path)) dataset.request = std::string(util::trim(util::read_file(request_path.string())));

  dataset.source_id = fs::absolute(dir).lexically_normal().filename().string();
  if (dataset.source_id.empty()) dataset.source_id = fs::absolute(dir).parent_path().filename().string();
  const auto meta_path = dir / "meta.json";
  if (fs::exists(meta_path)) {
    try {
      auto meta = nlohmann::json::parse(util::read_file(meta_path.string()));
      if (meta.contains("source_id")) dataset.source_id = meta.at("source_id").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("meta.json: " + std::string(e.what()));
    }
  }
  return dataset;
}

void validate_dataset(const Dataset& dataset) {
  if (dataset.tables.empty()) throw PreconditionError("dataset '" + dataset.source_id + "' has no tables");
  std::set<std::string> names;
  for (const auto& t : dataset.tables) {
    if (!names.insert(t.name).second) throw PreconditionError("duplicate table name '" + t.name + "'");
  }
}

}  // namespace chartloom::ingest
