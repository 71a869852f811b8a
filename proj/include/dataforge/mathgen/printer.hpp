#pragma once

#include <string>

#include "dataforge/mathgen/ast.hpp"

namespace dataforge::mathgen {

/// Fully parenthesized source form; parse_expression(print_expr(e)) is
/// structurally equal to e.
std::string print_expr(const Expr& e);

/// Canonical template source; parse_template(print_template(t)) reproduces t.
std::string print_template(const MathTemplate& t);

}  // namespace dataforge::mathgen
