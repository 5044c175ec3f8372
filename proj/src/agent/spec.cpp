#include "chartloom/agent/spec.hpp"

#include <charconv>
#include <cmath>
#include <regex>
#include <set>

#include <yaml-cpp/yaml.h>

#include "chartloom/util/strings.hpp"

namespace chartloom::agent {

namespace {

const std::set<std::string, std::less<>> kKnownKeys = {"chart_type", "title", "data", "labels", "ref_tables"};

bool is_int_literal(std::string_view s) {
  static const std::regex re(R"([-+]?(0|[1-9][0-9]*))");
  return std::regex_match(s.begin(), s.end(), re);
}

bool is_float_literal(std::string_view s) {
  static const std::regex re(R"([-+]?(\.[0-9]+|[0-9]+(\.[0-9]*)?)([eE][-+]?[0-9]+)?)");
  return std::regex_match(s.begin(), s.end(), re);
}

Value scalar_value(const YAML::Node& node) {
  const std::string& s = node.Scalar();
  if (node.Tag() == "!") return s;  // quoted: always a string
  if (s.empty() || s == "~" || s == "null" || s == "Null" || s == "NULL") return nullptr;
  if (s == "true" || s == "True" || s == "TRUE") return true;
  if (s == "false" || s == "False" || s == "FALSE") return false;
  if (is_int_literal(s)) {
    std::int64_t v = 0;
    auto begin = s.data() + (s[0] == '+' ? 1 : 0);
    auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), v);
    if (ec == std::errc{} && ptr == s.data() + s.size()) return v;
  }
  if (is_float_literal(s)) {
    double v = 0;
    auto begin = s.data() + (s[0] == '+' ? 1 : 0);
    auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), v);
    if (ec == std::errc{} && ptr == s.data() + s.size()) return v;
  }
  return s;
}

Value to_value(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Scalar:
      return scalar_value(node);
    case YAML::NodeType::Sequence: {
      Value arr = Value::array();
      for (const auto& item : node) arr.push_back(to_value(item));
      return arr;
    }
    case YAML::NodeType::Map: {
      Value obj = Value::object();
      for (const auto& kv : node) obj[kv.first.as<std::string>()] = to_value(kv.second);
      return obj;
    }
  }
  return nullptr;
}

// A string that a plain yaml scalar would read back as something else.
bool needs_quotes(const std::string& s) {
  if (s.empty()) return true;
  YAML::Node probe;
  try {
    probe = YAML::Load(s);
  } catch (const YAML::Exception&) {
    return true;
  }
  if (!probe.IsScalar() || probe.Tag() == "!") return true;
  auto back = scalar_value(probe);
  return !back.is_string() || back.get<std::string>() != s;
}

std::string format_double(double v) {
  if (std::isnan(v)) return ".nan";
  if (std::isinf(v)) return v > 0 ? ".inf" : "-.inf";
  auto s = util::format_number(v);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

void emit(YAML::Emitter& out, const Value& v) {
  switch (v.type()) {
    case Value::value_t::null:
      out << YAML::Null;
      break;
    case Value::value_t::boolean:
      out << (v.get<bool>() ? "true" : "false");
      break;
    case Value::value_t::number_integer:
      out << v.get<std::int64_t>();
      break;
    case Value::value_t::number_unsigned:
      out << v.get<std::uint64_t>();
      break;
    case Value::value_t::number_float:
      out << format_double(v.get<double>());
      break;
    case Value::value_t::string: {
      const auto& s = v.get_ref<const std::string&>();
      if (needs_quotes(s)) out << YAML::DoubleQuoted << s;
      else out << s;
      break;
    }
    case Value::value_t::array: {
      // Short scalar lists (positions) read better inline.
      bool flow = !v.empty() && v.size() <= 4 &&
                  std::all_of(v.begin(), v.end(), [](const Value& x) { return x.is_primitive(); });
      if (flow) out << YAML::Flow;
      out << YAML::BeginSeq;
      for (const auto& item : v) emit(out, item);
      out << YAML::EndSeq;
      break;
    }
    case Value::value_t::object:
      out << YAML::BeginMap;
      for (const auto& [key, item] : v.items()) {
        out << YAML::Key << key << YAML::Value;
        emit(out, item);
      }
      out << YAML::EndMap;
      break;
    default:
      out << YAML::Null;
  }
}

std::string strip_wrappers(std::string_view text) {
  auto t = util::trim(text);
  if (t.starts_with("```")) {
    auto fence = util::first_fenced_block(t);
    if (fence.found) return fence.body;
  }
  if (t.starts_with("\"\"\"")) {
    t.remove_prefix(3);
    if (auto end = t.rfind("\"\"\""); end != std::string_view::npos) t = t.substr(0, end);
  }
  return std::string(t);
}

// Quotes plain scalar values holding ": " so yaml reads them as one string:
//   title: Global Smoking Trends: 2000–2022
std::string quote_colon_values(const std::string& text) {
  static const std::regex line_re(R"(^(\s*(?:-\s+)?[A-Za-z_][\w .()-]*:\s+)(.*)$)");
  std::string out;
  for (const auto& line : util::split_lines(text)) {
    std::smatch m;
    if (std::regex_match(line, m, line_re)) {
      std::string value = m[2].str();
      const char first = value.empty() ? '\0' : value.front();
      const bool structured = first == '"' || first == '\'' || first == '[' || first == '{' || first == '|' ||
                              first == '>' || first == '&' || first == '*' || first == '!';
      if (!structured && value.find(": ") != std::string::npos) {
        std::string escaped;
        for (char c : value) {
          if (c == '"' || c == '\\') escaped += '\\';
          escaped += c;
        }
        out += m[1].str() + "\"" + escaped + "\"\n";
        continue;
      }
    }
    out += line + "\n";
  }
  return out;
}

YAML::Node load_yaml(const std::string& text) {
  try {
    return YAML::Load(text);
  } catch (const YAML::Exception&) {
  }
  try {
    return YAML::Load(quote_colon_values(text));
  } catch (const YAML::Exception& e) {
    throw ParseError(std::string("visualization spec is not valid yaml: ") + e.what());
  }
}

std::string require_string(const Value& root, const char* key) {
  if (!root.contains(key) || root.at(key).is_null()) throw SpecValidationError(key, "missing required key");
  const auto& v = root.at(key);
  std::string s;
  if (v.is_string()) s = v.get<std::string>();
  else if (v.is_primitive()) s = v.dump();
  else throw SpecValidationError(key, "must be a string");
  if (util::trim(s).empty()) throw SpecValidationError(key, "must not be empty");
  return s;
}

// Column-oriented data ({Year: [..], Value: [..]}) becomes records.
std::vector<Value> records_from(const Value& data) {
  std::vector<Value> records;
  if (data.is_array()) {
    for (const auto& r : data) records.push_back(r);
    return records;
  }
  if (data.is_object() && !data.empty()) {
    std::size_t n = 0;
    bool columnar = true;
    for (const auto& [k, col] : data.items()) {
      if (!col.is_array() || (n && col.size() != n)) columnar = false;
      else n = col.size();
    }
    if (columnar) {
      for (std::size_t i = 0; i < n; ++i) {
        Value rec = Value::object();
        for (const auto& [k, col] : data.items()) rec[k] = col[i];
        records.push_back(std::move(rec));
      }
      return records;
    }
  }
  throw SpecValidationError("data", "must be a list of records");
}

}  // namespace

std::vector<std::string> VisualizationSpec::field_names() const {
  std::vector<std::string> names;
  if (!data.empty()) {
    for (const auto& [k, _] : data.front().items()) names.push_back(k);
  }
  return names;
}

std::optional<std::string> VisualizationSpec::label_string(std::string_view key) const {
  if (!labels.is_object()) return std::nullopt;
  auto it = labels.find(std::string(key));
  if (it == labels.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_primitive()) return it->dump();
  return std::nullopt;
}

std::optional<std::string> VisualizationSpec::axis_label(char axis) const {
  std::string base = std::string(1, axis) + "_axis";
  if (auto v = label_string(base + "_label")) return v;
  return label_string(base);
}

std::vector<std::string> VisualizationSpec::annotation_texts() const {
  std::vector<std::string> texts;
  if (!labels.is_object() || !labels.contains("annotations")) return texts;
  const auto& anns = labels.at("annotations");
  if (!anns.is_array()) return texts;
  for (const auto& a : anns) {
    if (a.is_string()) texts.push_back(a.get<std::string>());
    else if (a.is_object() && a.contains("text") && a.at("text").is_string()) texts.push_back(a.at("text").get<std::string>());
  }
  return texts;
}

bool VisualizationSpec::operator==(const VisualizationSpec& other) const {
  return chart_type == other.chart_type && title == other.title && data == other.data && labels == other.labels &&
         ref_tables == other.ref_tables && extra == other.extra;
}

void validate_spec(const VisualizationSpec& spec) {
  if (util::trim(spec.chart_type).empty()) throw SpecValidationError("chart_type", "must not be empty");
  if (util::trim(spec.title).empty()) throw SpecValidationError("title", "must not be empty");
  if (spec.data.empty()) throw SpecValidationError("data", "must contain at least one record");
  if (spec.data.size() > kMaxSpecRecords) {
    throw SpecValidationError("data", std::to_string(spec.data.size()) + " records exceed the limit of " +
                                          std::to_string(kMaxSpecRecords) + "; aggregate the data further");
  }
  std::vector<std::string> fields;
  for (std::size_t i = 0; i < spec.data.size(); ++i) {
    const auto& rec = spec.data[i];
    if (!rec.is_object() || rec.empty()) {
      throw SpecValidationError("data", "record " + std::to_string(i) + " is not a field map");
    }
    std::vector<std::string> keys;
    for (const auto& [k, v] : rec.items()) {
      if (!v.is_primitive()) throw SpecValidationError("data", "record " + std::to_string(i) + " field '" + k + "' is not a scalar");
      keys.push_back(k);
    }
    std::sort(keys.begin(), keys.end());
    if (i == 0) fields = keys;
    else if (keys != fields) throw SpecValidationError("data", "record " + std::to_string(i) + " has a different field set");
  }
}

VisualizationSpec parse_spec(std::string_view text) {
  auto root_node = load_yaml(strip_wrappers(text));
  if (!root_node.IsMap()) throw ParseError("visualization spec must be a yaml mapping");
  Value root = to_value(root_node);

  VisualizationSpec spec;
  spec.chart_type = require_string(root, "chart_type");
  spec.title = require_string(root, "title");
  if (!root.contains("data") || root.at("data").is_null()) throw SpecValidationError("data", "missing required key");
  spec.data = records_from(root.at("data"));
  if (!root.contains("labels")) throw SpecValidationError("labels", "missing required key");
  spec.labels = root.at("labels");
  if (root.contains("ref_tables")) {
    const auto& refs = root.at("ref_tables");
    if (refs.is_string()) {
      spec.ref_tables.push_back(refs.get<std::string>());
    } else if (refs.is_array()) {
      for (const auto& r : refs) {
        if (r.is_string()) spec.ref_tables.push_back(r.get<std::string>());
      }
    }
  }
  for (const auto& [k, v] : root.items()) {
    if (!kKnownKeys.contains(k)) spec.extra[k] = v;
  }
  validate_spec(spec);
  return spec;
}

std::string serialize_spec(const VisualizationSpec& spec) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "chart_type" << YAML::Value;
  emit(out, spec.chart_type);
  out << YAML::Key << "title" << YAML::Value;
  emit(out, spec.title);
  out << YAML::Key << "data" << YAML::Value << YAML::BeginSeq;
  for (const auto& rec : spec.data) emit(out, rec);
  out << YAML::EndSeq;
  out << YAML::Key << "labels" << YAML::Value;
  emit(out, spec.labels);
  if (!spec.ref_tables.empty()) {
    out << YAML::Key << "ref_tables" << YAML::Value << YAML::BeginSeq;
    for (const auto& t : spec.ref_tables) emit(out, t);
    out << YAML::EndSeq;
  }
  for (const auto& [k, v] : spec.extra.items()) {
    out << YAML::Key << k << YAML::Value;
    emit(out, v);
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::vector<std::string> infer_ref_tables(const VisualizationSpec& spec, const ingest::Dataset& dataset) {
  std::vector<std::string> refs;
  const auto fields = spec.field_names();
  for (const auto& table : dataset.tables) {
    bool hit = std::any_of(fields.begin(), fields.end(), [&](const std::string& f) {
      return table.column_index(f).has_value();
    });
    if (hit) refs.push_back(table.name);
  }
  return refs;
}

std::vector<std::string> ungrounded_values(const VisualizationSpec& spec, const ingest::Dataset& dataset) {
  std::vector<const ingest::Table*> tables;
  auto refs = spec.ref_tables.empty() ? infer_ref_tables(spec, dataset) : spec.ref_tables;
  for (const auto& name : refs) {
    if (const auto* t = dataset.find_table(name)) tables.push_back(t);
  }

  std::set<std::string> strings;
  std::vector<double> numbers;
  for (const auto* t : tables) {
    for (const auto& row : t->rows) {
      for (const auto& cell : row) {
        auto trimmed = std::string(util::trim(cell));
        strings.insert(trimmed);
        if (auto n = ingest::parse_number(trimmed)) numbers.push_back(*n);
      }
    }
  }
  std::sort(numbers.begin(), numbers.end());

  auto number_present = [&](double v) {
    const double tol = 1e-9 * std::max(1.0, std::abs(v));
    auto it = std::lower_bound(numbers.begin(), numbers.end(), v - tol);
    return it != numbers.end() && *it <= v + tol;
  };

  std::vector<std::string> missing;
  for (const auto& rec : spec.data) {
    for (const auto& [k, v] : rec.items()) {
      if (v.is_null()) continue;
      if (v.is_number()) {
        if (!number_present(v.get<double>())) missing.push_back(k + "=" + v.dump());
      } else if (v.is_string()) {
        if (!strings.contains(v.get<std::string>())) missing.push_back(k + "=" + v.get<std::string>());
      } else if (!strings.contains(v.dump())) {
        missing.push_back(k + "=" + v.dump());
      }
    }
  }
  return missing;
}

}  // namespace chartloom::agent
