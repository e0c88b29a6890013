#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "siriette/columnar/batch.hpp"
#include "siriette/plan/plan.hpp"

namespace siriette::datagen {

struct GenSpec {
  uint64_t seed = 1;
  double scale = 0.01;
};

// Row counts: customer 150,000 x SF, orders 1,500,000 x SF (both rounded, at
// least 1), lineitem 1..7 lines per order (about 6,000,000 x SF).
size_t customer_rows(double scale);
size_t order_rows(double scale);

Schema customer_schema();
Schema orders_schema();
Schema lineitem_schema();
plan::Catalog tpch_catalog();

struct Generated {
  Table customer;
  Table orders;
  Table lineitem;
};

// Identical specs produce identical tables.
Generated generate(const GenSpec& spec, size_t batch_rows = 65536);

// Writes <table>.csv and <table>.schema.json for each table into `dir`.
void write_tables(const Generated& g, const std::filesystem::path& dir);

}  // namespace siriette::datagen
