#include "dataforge/mathgen/ast.hpp"

#include <algorithm>

namespace dataforge::mathgen {

ExprPtr make_literal(Rational v, SourcePos pos) { return std::make_shared<const Expr>(Expr{Literal{std::move(v)}, pos}); }

ExprPtr make_identifier(std::string name, SourcePos pos) {
  return std::make_shared<const Expr>(Expr{Identifier{std::move(name)}, pos});
}

ExprPtr make_unary(UnaryOp op, ExprPtr operand, SourcePos pos) {
  return std::make_shared<const Expr>(Expr{Unary{op, std::move(operand)}, pos});
}

ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs, SourcePos pos) {
  return std::make_shared<const Expr>(Expr{Binary{op, std::move(lhs), std::move(rhs)}, pos});
}

bool same_tree(const Expr& a, const Expr& b) {
  if (a.node.index() != b.node.index()) return false;
  if (const auto* la = std::get_if<Literal>(&a.node)) return la->value == std::get<Literal>(b.node).value;
  if (const auto* ia = std::get_if<Identifier>(&a.node)) return ia->name == std::get<Identifier>(b.node).name;
  if (const auto* ua = std::get_if<Unary>(&a.node)) {
    const auto& ub = std::get<Unary>(b.node);
    return ua->op == ub.op && same_tree(*ua->operand, *ub.operand);
  }
  const auto& ba = std::get<Binary>(a.node);
  const auto& bb = std::get<Binary>(b.node);
  return ba.op == bb.op && same_tree(*ba.lhs, *bb.lhs) && same_tree(*ba.rhs, *bb.rhs);
}

const char* symbol(BinaryOp op) {
  switch (op) {
    case BinaryOp::add: return "+";
    case BinaryOp::sub: return "-";
    case BinaryOp::mul: return "*";
    case BinaryOp::div: return "/";
    case BinaryOp::floordiv: return "//";
    case BinaryOp::mod: return "%";
    case BinaryOp::eq: return "==";
    case BinaryOp::ne: return "!=";
    case BinaryOp::lt: return "<";
    case BinaryOp::le: return "<=";
    case BinaryOp::gt: return ">";
    case BinaryOp::ge: return ">=";
    case BinaryOp::logical_and: return "and";
    case BinaryOp::logical_or: return "or";
  }
  return "?";
}

bool is_comparison(BinaryOp op) {
  return op == BinaryOp::eq || op == BinaryOp::ne || op == BinaryOp::lt || op == BinaryOp::le || op == BinaryOp::gt ||
         op == BinaryOp::ge;
}

bool is_logical(BinaryOp op) { return op == BinaryOp::logical_and || op == BinaryOp::logical_or; }

bool in_domain(const Domain& d, const Rational& v) {
  if (const auto* r = std::get_if<IntegerRange>(&d)) {
    return is_integer(v) && Rational(r->lo) <= v && v <= Rational(r->hi);
  }
  const auto& s = std::get<ValueSet>(d).values;
  return std::find(s.begin(), s.end(), v) != s.end();
}

const Param* MathTemplate::find_param(const std::string& n) const {
  for (const auto& p : params)
    if (p.name == n) return &p;
  return nullptr;
}

bool same_template(const MathTemplate& a, const MathTemplate& b) {
  if (a.params.size() != b.params.size() || a.lets.size() != b.lets.size() ||
      a.constraints.size() != b.constraints.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    if (a.params[i].name != b.params[i].name || !(a.params[i].domain == b.params[i].domain)) return false;
  }
  for (std::size_t i = 0; i < a.lets.size(); ++i) {
    if (a.lets[i].name != b.lets[i].name || !same_tree(*a.lets[i].value, *b.lets[i].value)) return false;
  }
  for (std::size_t i = 0; i < a.constraints.size(); ++i) {
    if (!same_tree(*a.constraints[i].expr, *b.constraints[i].expr) ||
        a.constraints[i].ready_after != b.constraints[i].ready_after) {
      return false;
    }
  }
  return same_tree(*a.result, *b.result) && a.question == b.question && a.original_values == b.original_values &&
         a.original_answer == b.original_answer;
}

}  // namespace dataforge::mathgen
