#pragma once

#include <string>
#include <string_view>

#include "dataforge/mathgen/ast.hpp"

namespace dataforge::mathgen {

// Template grammar, statements separated by ';' ('#' starts a comment):
//
//   param <id> in [<int>, <int>]
//   param <id> in {<rat>, ...}
//   constraint <boolexpr>
//   let <id> = <expr>
//   return <expr>
//   question "<text with {param} slots>"
//   original { <id>: <rat>, ... } answer <rat>
//
// Expressions, loosest to tightest: or, and, not, comparison (== != < <= > >=,
// non-associative), + -, * / // %, unary -, primary (number, identifier, parens).
MathTemplate parse_template(std::string_view source, std::string name = "template");

/// Parses a single expression with no declared names (no type/scope checks).
ExprPtr parse_expression(std::string_view source);

/// Type of an expression given the declared identifiers (all numeric).
ValueType type_of(const Expr& e);

}  // namespace dataforge::mathgen
