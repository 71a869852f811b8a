#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dataforge/error.hpp"
#include "dataforge/mathgen/rational.hpp"

namespace dataforge::mathgen {

struct SourcePos {
  std::size_t line = 1;
  std::size_t column = 1;
};

class ParseError : public ValidationError {
 public:
  ParseError(const std::string& message, SourcePos pos)
      : ValidationError(std::to_string(pos.line) + ":" + std::to_string(pos.column) + ": " + message), pos_(pos) {}
  SourcePos pos() const { return pos_; }

 private:
  SourcePos pos_;
};

class EvalError : public Error {
 public:
  enum class Kind { division_by_zero, non_integer, domain, type };
  EvalError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

enum class BinaryOp { add, sub, mul, div, floordiv, mod, eq, ne, lt, le, gt, ge, logical_and, logical_or };
enum class UnaryOp { negate, logical_not };
enum class ValueType { number, boolean };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Literal {
  Rational value;
};
struct Identifier {
  std::string name;
};
struct Unary {
  UnaryOp op;
  ExprPtr operand;
};
struct Binary {
  BinaryOp op;
  ExprPtr lhs;
  ExprPtr rhs;
};

struct Expr {
  std::variant<Literal, Identifier, Unary, Binary> node;
  SourcePos pos;
};

ExprPtr make_literal(Rational v, SourcePos pos = {});
ExprPtr make_identifier(std::string name, SourcePos pos = {});
ExprPtr make_unary(UnaryOp op, ExprPtr operand, SourcePos pos = {});
ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs, SourcePos pos = {});

/// Structural equality, ignoring source positions.
bool same_tree(const Expr& a, const Expr& b);

const char* symbol(BinaryOp op);
bool is_comparison(BinaryOp op);
bool is_logical(BinaryOp op);

struct IntegerRange {
  BigInt lo;
  BigInt hi;
  bool operator==(const IntegerRange&) const = default;
};
struct ValueSet {
  std::vector<Rational> values;
  bool operator==(const ValueSet&) const = default;
};
using Domain = std::variant<IntegerRange, ValueSet>;

bool in_domain(const Domain& d, const Rational& v);

struct Param {
  std::string name;
  Domain domain;
};

struct Assignment {
  std::string name;
  ExprPtr value;
};

struct Constraint {
  ExprPtr expr;
  // Constraint becomes checkable once this many `let`s have been evaluated.
  std::size_t ready_after = 0;
};

using Substitution = std::map<std::string, Rational>;

// A parameterized solution program plus its question text.
struct MathTemplate {
  std::string name;
  std::vector<Param> params;
  std::vector<Constraint> constraints;
  std::vector<Assignment> lets;
  ExprPtr result;
  std::string question;
  std::optional<Substitution> original_values;
  std::optional<Rational> original_answer;

  const Param* find_param(const std::string& name) const;
};

/// Structural equality of whole templates (used by the round-trip property).
bool same_template(const MathTemplate& a, const MathTemplate& b);

}  // namespace dataforge::mathgen
