#pragma once

#include <variant>

#include "dataforge/mathgen/ast.hpp"

namespace dataforge::mathgen {

using Value = std::variant<Rational, bool>;

Value evaluate(const Expr& e, const Substitution& env);
Rational evaluate_number(const Expr& e, const Substitution& env);
bool evaluate_bool(const Expr& e, const Substitution& env);

/// Checks that `subst` covers every param with an in-domain value; throws
/// EvalError(domain) otherwise.
void check_substitution(const MathTemplate& t, const Substitution& subst);

/// Runs the program in order and returns the value of `return`.
/// Throws EvalError on domain violations, division by zero, or // and % on
/// non-integers.
Rational eval_program(const MathTemplate& t, const Substitution& subst);

/// Same as eval_program without the domain precondition (for original values).
Rational eval_program_unchecked(const MathTemplate& t, const Substitution& subst);

}  // namespace dataforge::mathgen
