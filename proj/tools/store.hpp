#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "siriette/columnar/batch.hpp"

namespace siriette::cli {

// Tables persisted between invocations: <dir>/<name>.schema.json next to
// <dir>/<name>.tbl (u64 batch count, then per batch a u64 byte length and the
// serialized batch).
class DataStore {
 public:
  explicit DataStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  bool contains(const std::string& name) const;
  std::vector<std::string> names() const;

  // InvalidArgument when a table of that name is already stored.
  void save(const Table& table);
  // MissingTable when absent.
  Table load(const std::string& name) const;

 private:
  std::filesystem::path dir_;
};

// $SIRIETTE_DATA, else ./siriette-data.
std::filesystem::path default_data_dir();

// Base tables read anywhere in a plan document.
std::set<std::string> referenced_tables(std::string_view plan_document);

}  // namespace siriette::cli
