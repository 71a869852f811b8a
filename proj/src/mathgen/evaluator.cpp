#include "dataforge/mathgen/evaluator.hpp"

#include "dataforge/mathgen/printer.hpp"

namespace dataforge::mathgen {

namespace {

const Rational& as_number(const Value& v, const Expr& where) {
  if (const auto* r = std::get_if<Rational>(&v)) return *r;
  throw EvalError(EvalError::Kind::type, "expected a number in '" + print_expr(where) + "'");
}

bool as_bool(const Value& v, const Expr& where) {
  if (const auto* b = std::get_if<bool>(&v)) return *b;
  throw EvalError(EvalError::Kind::type, "expected a boolean in '" + print_expr(where) + "'");
}

BigInt require_integer(const Rational& r, const Expr& where) {
  if (!is_integer(r)) {
    throw EvalError(EvalError::Kind::non_integer,
                    "'" + print_expr(where) + "' needs integer operands, got " + to_fraction_string(r));
  }
  return boost::multiprecision::numerator(r);
}

}  // namespace

Value evaluate(const Expr& e, const Substitution& env) {
  if (const auto* lit = std::get_if<Literal>(&e.node)) return lit->value;
  if (const auto* id = std::get_if<Identifier>(&e.node)) {
    auto it = env.find(id->name);
    if (it == env.end()) throw EvalError(EvalError::Kind::domain, "no value bound for '" + id->name + "'");
    return it->second;
  }
  if (const auto* u = std::get_if<Unary>(&e.node)) {
    const Value v = evaluate(*u->operand, env);
    if (u->op == UnaryOp::negate) return Rational(-as_number(v, e));
    return !as_bool(v, e);
  }
  const auto& b = std::get<Binary>(e.node);
  if (b.op == BinaryOp::logical_and) {
    return as_bool(evaluate(*b.lhs, env), e) && as_bool(evaluate(*b.rhs, env), e);
  }
  if (b.op == BinaryOp::logical_or) {
    return as_bool(evaluate(*b.lhs, env), e) || as_bool(evaluate(*b.rhs, env), e);
  }
  const Value lv = evaluate(*b.lhs, env);
  const Value rv = evaluate(*b.rhs, env);
  const Rational& l = as_number(lv, e);
  const Rational& r = as_number(rv, e);
  switch (b.op) {
    case BinaryOp::add: return Rational(l + r);
    case BinaryOp::sub: return Rational(l - r);
    case BinaryOp::mul: return Rational(l * r);
    case BinaryOp::div:
      if (r == 0) throw EvalError(EvalError::Kind::division_by_zero, "division by zero in '" + print_expr(e) + "'");
      return Rational(l / r);
    case BinaryOp::floordiv:
    case BinaryOp::mod: {
      const BigInt li = require_integer(l, e);
      const BigInt ri = require_integer(r, e);
      if (ri == 0) throw EvalError(EvalError::Kind::division_by_zero, "division by zero in '" + print_expr(e) + "'");
      return Rational(b.op == BinaryOp::floordiv ? floor_div(li, ri) : floor_mod(li, ri));
    }
    case BinaryOp::eq: return l == r;
    case BinaryOp::ne: return l != r;
    case BinaryOp::lt: return l < r;
    case BinaryOp::le: return l <= r;
    case BinaryOp::gt: return l > r;
    case BinaryOp::ge: return l >= r;
    case BinaryOp::logical_and:
    case BinaryOp::logical_or: break;
  }
  throw EvalError(EvalError::Kind::type, "unsupported operator");
}

Rational evaluate_number(const Expr& e, const Substitution& env) { return as_number(evaluate(e, env), e); }

bool evaluate_bool(const Expr& e, const Substitution& env) { return as_bool(evaluate(e, env), e); }

void check_substitution(const MathTemplate& t, const Substitution& subst) {
  for (const auto& p : t.params) {
    auto it = subst.find(p.name);
    if (it == subst.end()) throw EvalError(EvalError::Kind::domain, "missing value for param '" + p.name + "'");
    if (!in_domain(p.domain, it->second)) {
      throw EvalError(EvalError::Kind::domain,
                      "value " + to_fraction_string(it->second) + " for '" + p.name + "' is outside its domain");
    }
  }
}

Rational eval_program_unchecked(const MathTemplate& t, const Substitution& subst) {
  Substitution env;
  for (const auto& p : t.params) {
    auto it = subst.find(p.name);
    if (it == subst.end()) throw EvalError(EvalError::Kind::domain, "missing value for param '" + p.name + "'");
    env.emplace(p.name, it->second);
  }
  for (const auto& a : t.lets) env[a.name] = evaluate_number(*a.value, env);
  return evaluate_number(*t.result, env);
}

Rational eval_program(const MathTemplate& t, const Substitution& subst) {
  check_substitution(t, subst);
  return eval_program_unchecked(t, subst);
}

}  // namespace dataforge::mathgen
