#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "siriette/columnar/batch.hpp"

namespace siriette {

inline constexpr size_t kDefaultBatchRows = 65536;

struct CsvOptions {
  bool header = false;
  size_t batch_rows = kDefaultBatchRows;
};

// CSV dialect: comma separated, UTF-8, an empty unquoted field is null, a
// quoted field ("..." with "" escapes) is always a value. Dates are
// YYYY-MM-DD and decimals plain digit strings. Parse failures raise ParseError
// naming the 1-based line and column.
Table read_csv(std::istream& in, std::string name, const Schema& schema, const CsvOptions& options = {});
Table read_csv_text(std::string_view text, std::string name, const Schema& schema, const CsvOptions& options = {});
Table read_csv_file(const std::filesystem::path& path, std::string name, const Schema& schema,
                    const CsvOptions& options = {});

void write_csv(std::ostream& out, const Table& table, bool header = false);
std::string to_csv(const Table& table, bool header = false);

// Schema files are JSON: {"name": "...", "columns": [{"name", "type", "nullable"}]}.
struct TableSchema {
  std::string name;
  Schema schema;
};
TableSchema read_schema_file(const std::filesystem::path& path);
TableSchema parse_schema_json(std::string_view text);
std::string schema_to_json(const TableSchema& schema);

}  // namespace siriette
