#include "siriette/columnar/csv.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace siriette {

namespace {

struct CsvField {
  std::string text;
  bool quoted = false;
};

[[noreturn]] void parse_error(size_t line, size_t column, const std::string& what) {
  raise(ErrorCode::kParseError, "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what);
}

// Splits one logical record; quoted fields may span physical lines.
bool next_record(std::istream& in, std::vector<CsvField>& fields, size_t& line) {
  fields.clear();
  std::string raw;
  if (!std::getline(in, raw)) return false;
  ++line;
  if (!raw.empty() && raw.back() == '\r') raw.pop_back();
  CsvField cur;
  bool in_quotes = false;
  size_t i = 0;
  while (true) {
    if (i >= raw.size()) {
      if (in_quotes) {
        std::string more;
        if (!std::getline(in, more)) parse_error(line, fields.size() + 1, "unterminated quoted field");
        ++line;
        if (!more.empty() && more.back() == '\r') more.pop_back();
        cur.text.push_back('\n');
        raw = std::move(more);
        i = 0;
        continue;
      }
      fields.push_back(std::move(cur));
      return true;
    }
    char c = raw[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < raw.size() && raw[i + 1] == '"') {
          cur.text.push_back('"');
          i += 2;
          continue;
        }
        in_quotes = false;
      } else {
        cur.text.push_back(c);
      }
    } else if (c == '"' && cur.text.empty() && !cur.quoted) {
      in_quotes = true;
      cur.quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur = CsvField{};
    } else {
      cur.text.push_back(c);
    }
    ++i;
  }
}

}  // namespace

Table read_csv(std::istream& in, std::string name, const Schema& schema, const CsvOptions& options) {
  std::vector<ColumnBuilder> builders;
  builders.reserve(schema.size());
  for (const auto& f : schema) builders.emplace_back(f.type);
  std::vector<Batch> batches;
  auto flush = [&] {
    if (builders.empty() || builders[0].size() == 0) return;
    std::vector<Column> cols;
    for (auto& b : builders) cols.push_back(b.finish());
    batches.emplace_back(std::move(cols));
  };

  std::vector<CsvField> fields;
  size_t line = 0;
  if (options.header) next_record(in, fields, line);
  while (true) {
    size_t record_line = line + 1;
    if (!next_record(in, fields, line)) break;
    if (fields.size() == 1 && fields[0].text.empty() && !fields[0].quoted && schema.size() != 1) continue;
    if (fields.size() != schema.size()) {
      parse_error(record_line, std::min(fields.size(), schema.size()) + 1,
                  "expected " + std::to_string(schema.size()) + " fields, found " + std::to_string(fields.size()));
    }
    for (size_t c = 0; c < schema.size(); ++c) {
      const auto& f = fields[c];
      if (f.text.empty() && !f.quoted) {
        if (!schema[c].nullable) parse_error(record_line, c + 1, "null in non-nullable column '" + schema[c].name + "'");
        builders[c].append_null();
        continue;
      }
      auto v = parse_datum(f.text, schema[c].type);
      if (!v) {
        parse_error(record_line, c + 1,
                    "cannot parse '" + f.text + "' as " + schema[c].type.to_string() + " for '" + schema[c].name + "'");
      }
      builders[c].append(*v);
    }
    if (builders[0].size() >= options.batch_rows) flush();
  }
  flush();
  return Table(std::move(name), schema, std::move(batches));
}

Table read_csv_text(std::string_view text, std::string name, const Schema& schema, const CsvOptions& options) {
  std::istringstream in{std::string(text)};
  return read_csv(in, std::move(name), schema, options);
}

Table read_csv_file(const std::filesystem::path& path, std::string name, const Schema& schema,
                    const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::kParseError, "cannot open '" + path.string() + "'");
  return read_csv(in, std::move(name), schema, options);
}

namespace {

void write_field(std::ostream& out, const std::string& text, bool is_null, bool is_string) {
  if (is_null) return;
  bool needs_quotes = is_string && (text.empty() || text.find_first_of(",\"\n\r") != std::string::npos);
  if (!needs_quotes) {
    out << text;
    return;
  }
  out << '"';
  for (char c : text) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

}  // namespace

void write_csv(std::ostream& out, const Table& table, bool header) {
  const auto& schema = table.schema();
  if (header) {
    for (size_t c = 0; c < schema.size(); ++c) {
      if (c) out << ',';
      write_field(out, schema[c].name, false, true);
    }
    out << '\n';
  }
  for (const auto& batch : table.batches()) {
    for (size_t r = 0; r < batch.num_rows(); ++r) {
      for (size_t c = 0; c < batch.num_columns(); ++c) {
        if (c) out << ',';
        const auto& col = batch.column(c);
        bool valid = col.is_valid(r);
        std::string text = valid ? format_datum(col.datum(r), col.type()) : std::string();
        write_field(out, text, !valid, col.type().id == TypeId::kString);
      }
      out << '\n';
    }
  }
}

std::string to_csv(const Table& table, bool header) {
  std::ostringstream out;
  write_csv(out, table, header);
  return out.str();
}

TableSchema parse_schema_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::kParseError, std::string("schema: ") + e.what());
  }
  TableSchema out;
  try {
    out.name = doc.value("name", "");
    for (const auto& col : doc.at("columns")) {
      out.schema.push_back(siriette::Field{col.at("name").get<std::string>(), DataType::parse(col.at("type").get<std::string>()),
                                 col.value("nullable", true)});
    }
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::kParseError, std::string("schema: ") + e.what());
  }
  for (size_t i = 0; i < out.schema.size(); ++i) {
    for (size_t j = 0; j < i; ++j) {
      if (out.schema[i].name == out.schema[j].name) {
        raise(ErrorCode::kParseError, "schema: duplicate column '" + out.schema[i].name + "'");
      }
    }
  }
  return out;
}

TableSchema read_schema_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::kParseError, "cannot open schema '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_schema_json(ss.str());
}

std::string schema_to_json(const TableSchema& schema) {
  nlohmann::ordered_json doc;
  doc["name"] = schema.name;
  doc["columns"] = nlohmann::ordered_json::array();
  for (const auto& f : schema.schema) {
    doc["columns"].push_back({{"name", f.name}, {"type", f.type.to_string()}, {"nullable", f.nullable}});
  }
  return doc.dump(2);
}

}  // namespace siriette
