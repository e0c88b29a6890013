#pragma once

#include <random>
#include <string>
#include <vector>

#include "siriette/columnar/batch.hpp"
#include "siriette/oracle/scalar.hpp"

namespace siriette::testing {

struct RandomColumnSpec {
  DataType type;
  double null_density = 0.0;
  int64_t int_range = 20;  // INT64 values drawn from [-int_range, int_range]
};

// Values: INT64 small ints, FLOAT64 multiples of 0.25, DECIMAL(12,2) cents,
// DATE32 within 1992..1998, BOOL, STRING from a short vocabulary.
Column random_column(std::mt19937_64& rng, const RandomColumnSpec& spec, size_t rows);
Batch random_batch(std::mt19937_64& rng, const std::vector<RandomColumnSpec>& specs, size_t rows);

// Rows sorted into a canonical order (non-float columns first, then floats).
std::vector<oracle::Row> canonical_rows(const Table& t);

// Multiset comparison; FLOAT64 within `rel_tol` relative. On mismatch `why`
// describes the first difference.
bool equivalent(const Table& a, const Table& b, double rel_tol = 1e-9, std::string* why = nullptr);
// Exact row-order comparison under the same float tolerance.
bool equal_in_order(const Table& a, const Table& b, double rel_tol = 1e-9, std::string* why = nullptr);

// Canonically sorted CSV rendering; byte-comparable.
std::string canonical_csv(const Table& t);

Table make_table(std::string name, Schema schema, std::vector<Batch> batches);

}  // namespace siriette::testing

namespace siriette::testing {

std::string read_file(const std::string& path);
// Absolute path of a committed plan document, e.g. plan_path("q6").
std::string plan_path(const std::string& name);
std::string plan_text(const std::string& name);

}  // namespace siriette::testing

#include "siriette/plan/expr.hpp"

namespace siriette::testing {

// Random, already-resolved expressions over `schema`. Values stay small enough
// that no operator can overflow on the random_column value ranges.
plan::ExprPtr random_predicate(std::mt19937_64& rng, const Schema& schema, int depth = 2);
plan::ExprPtr random_value(std::mt19937_64& rng, const Schema& schema, int depth = 2);

}  // namespace siriette::testing
