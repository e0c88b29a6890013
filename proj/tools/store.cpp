#include "store.hpp"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "siriette/columnar/csv.hpp"
#include "siriette/columnar/serialize.hpp"
#include "siriette/common/bytes.hpp"
#include "siriette/common/error.hpp"
#include "siriette/plan/document.hpp"

namespace siriette::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSchemaSuffix = ".schema.json";
constexpr const char* kDataSuffix = ".tbl";

void check_name(const std::string& name) {
  if (name.empty() || name.find_first_of("/\\.") != std::string::npos) {
    raise(ErrorCode::kInvalidArgument, "invalid table name '" + name + "'");
  }
}

}  // namespace

DataStore::DataStore(fs::path dir) : dir_(std::move(dir)) {}

bool DataStore::contains(const std::string& name) const {
  return fs::exists(dir_ / (name + kSchemaSuffix)) && fs::exists(dir_ / (name + kDataSuffix));
}

std::vector<std::string> DataStore::names() const {
  std::vector<std::string> out;
  if (!fs::is_directory(dir_)) return out;
  for (const auto& entry : fs::directory_iterator(dir_)) {
    auto file = entry.path().filename().string();
    if (file.size() > std::strlen(kDataSuffix) && file.ends_with(kDataSuffix)) {
      auto name = file.substr(0, file.size() - std::strlen(kDataSuffix));
      if (contains(name)) out.push_back(name);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void DataStore::save(const Table& table) {
  check_name(table.name());
  if (contains(table.name())) raise(ErrorCode::kInvalidArgument, "table '" + table.name() + "' is already loaded");
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) raise(ErrorCode::kInvalidArgument, "cannot create data directory '" + dir_.string() + "': " + ec.message());

  std::vector<uint8_t> bytes;
  ByteWriter w(bytes);
  w.put<uint64_t>(table.batches().size());
  for (const auto& b : table.batches()) {
    auto payload = serialize_batch(b);
    w.put<uint64_t>(payload.size());
    w.put_bytes(payload.data(), payload.size());
  }
  // Data first, schema last: a table is visible only once both exist.
  auto data_path = dir_ / (table.name() + kDataSuffix);
  {
    std::ofstream out(data_path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) raise(ErrorCode::kInternal, "cannot write '" + data_path.string() + "'");
  }
  auto schema_path = dir_ / (table.name() + kSchemaSuffix);
  std::ofstream out(schema_path, std::ios::trunc);
  out << schema_to_json({table.name(), table.schema()}) << "\n";
  if (!out) raise(ErrorCode::kInternal, "cannot write '" + schema_path.string() + "'");
}

Table DataStore::load(const std::string& name) const {
  check_name(name);
  if (!contains(name)) {
    raise(ErrorCode::kMissingTable, "table '" + name + "' is not loaded in '" + dir_.string() + "'");
  }
  auto schema = read_schema_file(dir_ / (name + kSchemaSuffix));
  std::ifstream in(dir_ / (name + kDataSuffix), std::ios::binary);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ByteReader r(bytes);
  auto count = r.get<uint64_t>();
  std::vector<Batch> batches;
  for (uint64_t i = 0; i < count; ++i) {
    auto len = r.get<uint64_t>();
    auto payload = r.take(len);
    batches.push_back(deserialize_batch(payload));
  }
  return Table(name, schema.schema, std::move(batches));
}

fs::path default_data_dir() {
  if (const char* env = std::getenv("SIRIETTE_DATA"); env && *env) return env;
  return fs::current_path() / "siriette-data";
}

std::set<std::string> referenced_tables(std::string_view plan_document) {
  auto graph = plan::parse_plan(plan_document, plan::all_relations());
  std::set<std::string> out;
  std::vector<const plan::RelNode*> stack{graph.root.get()};
  while (!stack.empty()) {
    const auto* n = stack.back();
    stack.pop_back();
    if (const auto* read = std::get_if<plan::ReadRel>(&n->rel)) out.insert(read->table);
    for (const auto& in : n->inputs) stack.push_back(in.get());
  }
  return out;
}

}  // namespace siriette::cli
