#pragma once

#include <memory>
#include <string>
#include <vector>

#include "siriette/common/types.hpp"

namespace siriette::plan {

enum class ExprKind { kColumn, kLiteral, kArith, kCompare, kBool, kLike, kCase, kCast };
enum class ArithOp { kAdd, kSub, kMul, kDiv };
enum class CompareOp { kEq, kNe, kLt, kLe, kGt, kGe };
enum class BoolOp { kAnd, kOr, kNot };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Expression tree node. `type` is the declared type for literals and casts and
// the resolved result type everywhere once the plan has been validated.
struct Expr {
  ExprKind kind = ExprKind::kLiteral;
  DataType type{};
  bool resolved = false;

  int column = -1;              // kColumn
  Datum literal;                // kLiteral
  ArithOp arith = ArithOp::kAdd;
  CompareOp compare = CompareOp::kEq;
  BoolOp boolean = BoolOp::kAnd;
  std::string pattern;          // kLike
  std::vector<ExprPtr> args;    // operands; kCase: when0, then0, when1, then1, ..., [else]
};

ExprPtr column_ref(int ordinal);
ExprPtr literal(DataType type, Datum value);
ExprPtr arith(ArithOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr compare(CompareOp op, ExprPtr lhs, ExprPtr rhs);
ExprPtr bool_and(std::vector<ExprPtr> args);
ExprPtr bool_or(std::vector<ExprPtr> args);
ExprPtr bool_not(ExprPtr arg);
ExprPtr like(ExprPtr input, std::string pattern);
ExprPtr case_when(std::vector<ExprPtr> args);
ExprPtr cast(ExprPtr input, DataType target);

// Structural equality; resolved types are ignored.
bool structurally_equal(const Expr& a, const Expr& b);
bool structurally_equal(const ExprPtr& a, const ExprPtr& b);

std::string_view arith_name(ArithOp op);
std::string_view compare_name(CompareOp op);

}  // namespace siriette::plan
