#include "dataforge/mathgen/printer.hpp"

#include <sstream>

namespace dataforge::mathgen {

namespace {

// Literals in expressions are unsigned decimals. A value with no terminating
// decimal form prints as a parenthesized division of two integers.
std::string literal_text(const Rational& v) {
  const auto dec = to_exact_decimal(v);
  if (!dec.empty()) return dec;
  return "(" + boost::multiprecision::numerator(v).str() + " / " + boost::multiprecision::denominator(v).str() + ")";
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

std::string print_expr(const Expr& e) {
  if (const auto* lit = std::get_if<Literal>(&e.node)) return literal_text(lit->value);
  if (const auto* id = std::get_if<Identifier>(&e.node)) return id->name;
  if (const auto* u = std::get_if<Unary>(&e.node)) {
    return u->op == UnaryOp::negate ? "(-" + print_expr(*u->operand) + ")" : "(not " + print_expr(*u->operand) + ")";
  }
  const auto& b = std::get<Binary>(e.node);
  return "(" + print_expr(*b.lhs) + " " + symbol(b.op) + " " + print_expr(*b.rhs) + ")";
}

std::string print_template(const MathTemplate& t) {
  std::ostringstream out;
  for (const auto& p : t.params) {
    out << "param " << p.name << " in ";
    if (const auto* r = std::get_if<IntegerRange>(&p.domain)) {
      out << "[" << r->lo.str() << ", " << r->hi.str() << "]";
    } else {
      out << "{";
      const auto& vs = std::get<ValueSet>(p.domain).values;
      for (std::size_t i = 0; i < vs.size(); ++i) out << (i ? ", " : "") << to_fraction_string(vs[i]);
      out << "}";
    }
    out << ";\n";
  }
  for (const auto& c : t.constraints) out << "constraint " << print_expr(*c.expr) << ";\n";
  for (const auto& a : t.lets) out << "let " << a.name << " = " << print_expr(*a.value) << ";\n";
  out << "return " << print_expr(*t.result) << ";\n";
  out << "question " << quote(t.question) << ";\n";
  if (t.original_values) {
    out << "original {";
    bool first = true;
    for (const auto& [n, v] : *t.original_values) {
      out << (first ? " " : ", ") << n << ": " << to_fraction_string(v);
      first = false;
    }
    out << " } answer " << to_fraction_string(t.original_answer.value_or(Rational(0))) << ";\n";
  }
  return out.str();
}

}  // namespace dataforge::mathgen
