#include "dataforge/mathgen/parser.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "lexer.hpp"

namespace dataforge::mathgen {

namespace {

const std::set<std::string, std::less<>> kKeywords = {"param",    "in",       "constraint", "let", "return",
                                                      "question", "original", "answer",     "and", "or", "not"};

class Parser {
 public:
  explicit Parser(std::string_view src) : toks_(lex(src)) {}

  MathTemplate parse_template(std::string name);
  ExprPtr parse_lone_expression() {
    auto e = expr();
    expect(Tok::end);
    return e;
  }

 private:
  const Token& peek(std::size_t off = 0) const { return toks_[std::min(i_ + off, toks_.size() - 1)]; }
  const Token& take() { return toks_[i_ < toks_.size() - 1 ? i_++ : i_]; }
  bool at(Tok k) const { return peek().kind == k; }
  bool at_keyword(std::string_view kw) const { return at(Tok::identifier) && peek().text == kw; }

  const Token& expect(Tok k) {
    if (!at(k)) {
      throw ParseError(std::string("expected ") + describe(k) + ", found " + found(), peek().pos);
    }
    return take();
  }
  void expect_keyword(std::string_view kw) {
    if (!at_keyword(kw)) throw ParseError("expected '" + std::string(kw) + "', found " + found(), peek().pos);
    take();
  }
  std::string found() const {
    const auto& t = peek();
    if (t.kind == Tok::end) return "end of input";
    return "'" + t.text + "'";
  }
  std::string expect_name() {
    const auto& t = expect(Tok::identifier);
    if (kKeywords.contains(t.text)) throw ParseError("'" + t.text + "' is a reserved word", t.pos);
    return t.text;
  }

  // Signed rational literal: -? number (/ number)?
  Rational rational_literal() {
    const SourcePos pos = peek().pos;
    std::string text;
    if (at(Tok::minus)) {
      take();
      text = "-";
    }
    text += expect(Tok::number).text;
    if (at(Tok::slash)) {
      take();
      text += "/" + expect(Tok::number).text;
    }
    try {
      return parse_rational(text);
    } catch (const ValidationError& e) {
      throw ParseError(e.what(), pos);
    }
  }

  BigInt integer_literal() {
    const SourcePos pos = peek().pos;
    const Rational r = rational_literal();
    if (!is_integer(r)) throw ParseError("integer range bounds must be integers", pos);
    return boost::multiprecision::numerator(r);
  }

  ExprPtr expr() { return or_expr(); }

  ExprPtr or_expr() {
    auto lhs = and_expr();
    while (at_keyword("or")) {
      const auto pos = take().pos;
      lhs = make_binary(BinaryOp::logical_or, lhs, and_expr(), pos);
    }
    return lhs;
  }

  ExprPtr and_expr() {
    auto lhs = not_expr();
    while (at_keyword("and")) {
      const auto pos = take().pos;
      lhs = make_binary(BinaryOp::logical_and, lhs, not_expr(), pos);
    }
    return lhs;
  }

  ExprPtr not_expr() {
    if (at_keyword("not")) {
      const auto pos = take().pos;
      return make_unary(UnaryOp::logical_not, not_expr(), pos);
    }
    return comparison();
  }

  static std::optional<BinaryOp> comparison_op(Tok k) {
    switch (k) {
      case Tok::eq: return BinaryOp::eq;
      case Tok::ne: return BinaryOp::ne;
      case Tok::lt: return BinaryOp::lt;
      case Tok::le: return BinaryOp::le;
      case Tok::gt: return BinaryOp::gt;
      case Tok::ge: return BinaryOp::ge;
      default: return std::nullopt;
    }
  }

  ExprPtr comparison() {
    auto lhs = additive();
    if (auto op = comparison_op(peek().kind)) {
      const auto pos = take().pos;
      lhs = make_binary(*op, lhs, additive(), pos);
      if (comparison_op(peek().kind)) {
        throw ParseError("comparisons do not chain; use 'and'", peek().pos);
      }
    }
    return lhs;
  }

  ExprPtr additive() {
    auto lhs = multiplicative();
    while (at(Tok::plus) || at(Tok::minus)) {
      const auto& t = take();
      lhs = make_binary(t.kind == Tok::plus ? BinaryOp::add : BinaryOp::sub, lhs, multiplicative(), t.pos);
    }
    return lhs;
  }

  ExprPtr multiplicative() {
    auto lhs = unary();
    for (;;) {
      BinaryOp op;
      if (at(Tok::star)) op = BinaryOp::mul;
      else if (at(Tok::slash)) op = BinaryOp::div;
      else if (at(Tok::slashslash)) op = BinaryOp::floordiv;
      else if (at(Tok::percent)) op = BinaryOp::mod;
      else break;
      const auto pos = take().pos;
      lhs = make_binary(op, lhs, unary(), pos);
    }
    return lhs;
  }

  ExprPtr unary() {
    if (at(Tok::minus)) {
      const auto pos = take().pos;
      return make_unary(UnaryOp::negate, unary(), pos);
    }
    return primary();
  }

  ExprPtr primary() {
    const auto& t = peek();
    if (t.kind == Tok::number) {
      take();
      return make_literal(parse_rational(t.text), t.pos);
    }
    if (t.kind == Tok::identifier) {
      if (kKeywords.contains(t.text)) throw ParseError("unexpected keyword '" + t.text + "' in expression", t.pos);
      take();
      return make_identifier(t.text, t.pos);
    }
    if (t.kind == Tok::lparen) {
      take();
      auto e = expr();
      expect(Tok::rparen);
      return e;
    }
    throw ParseError("expected an expression, found " + found(), t.pos);
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
};

void collect_identifiers(const Expr& e, std::vector<const Expr*>& out) {
  if (std::holds_alternative<Identifier>(e.node)) {
    out.push_back(&e);
  } else if (const auto* u = std::get_if<Unary>(&e.node)) {
    collect_identifiers(*u->operand, out);
  } else if (const auto* b = std::get_if<Binary>(&e.node)) {
    collect_identifiers(*b->lhs, out);
    collect_identifiers(*b->rhs, out);
  }
}

const char* type_name(ValueType t) { return t == ValueType::number ? "number" : "boolean"; }

ValueType checked_type(const Expr& e) {
  if (std::holds_alternative<Literal>(e.node) || std::holds_alternative<Identifier>(e.node)) return ValueType::number;
  if (const auto* u = std::get_if<Unary>(&e.node)) {
    const auto inner = checked_type(*u->operand);
    const auto want = u->op == UnaryOp::negate ? ValueType::number : ValueType::boolean;
    if (inner != want) {
      throw ParseError(std::string("type error: '") + (u->op == UnaryOp::negate ? "-" : "not") + "' expects a " +
                           type_name(want) + ", got a " + type_name(inner),
                       e.pos);
    }
    return want;
  }
  const auto& b = std::get<Binary>(e.node);
  const auto lt = checked_type(*b.lhs);
  const auto rt = checked_type(*b.rhs);
  const auto operand = is_logical(b.op) ? ValueType::boolean : ValueType::number;
  if (lt != operand || rt != operand) {
    throw ParseError(std::string("type error: '") + symbol(b.op) + "' expects " + type_name(operand) + " operands",
                     e.pos);
  }
  return is_logical(b.op) || is_comparison(b.op) ? ValueType::boolean : ValueType::number;
}

MathTemplate Parser::parse_template(std::string name) {
  MathTemplate t;
  t.name = std::move(name);
  std::map<std::string, std::size_t> let_index;
  std::set<std::string> declared;
  struct PendingConstraint {
    ExprPtr expr;
  };
  std::vector<PendingConstraint> constraints;
  bool have_question = false;
  SourcePos question_pos;
  SourcePos original_pos;

  const auto check_scope = [&](const Expr& e) {
    std::vector<const Expr*> ids;
    collect_identifiers(e, ids);
    for (const auto* id : ids) {
      const auto& n = std::get<Identifier>(id->node).name;
      if (!declared.contains(n)) throw ParseError("undeclared identifier '" + n + "'", id->pos);
    }
  };

  while (!at(Tok::end)) {
    if (at(Tok::semicolon)) {
      take();
      continue;
    }
    const Token kw = peek();
    if (kw.kind != Tok::identifier) throw ParseError("expected a statement, found " + found(), kw.pos);
    take();
    if (kw.text == "param") {
      const auto pos = peek().pos;
      Param p;
      p.name = expect_name();
      if (declared.contains(p.name)) throw ParseError("'" + p.name + "' is already declared", pos);
      expect_keyword("in");
      if (at(Tok::lbracket)) {
        take();
        IntegerRange r;
        r.lo = integer_literal();
        expect(Tok::comma);
        r.hi = integer_literal();
        expect(Tok::rbracket);
        if (r.lo > r.hi) throw ParseError("empty range for '" + p.name + "'", pos);
        p.domain = r;
      } else if (at(Tok::lbrace)) {
        take();
        ValueSet s;
        s.values.push_back(rational_literal());
        while (at(Tok::comma)) {
          take();
          s.values.push_back(rational_literal());
        }
        expect(Tok::rbrace);
        p.domain = s;
      } else {
        throw ParseError("expected '[' or '{' after 'in', found " + found(), peek().pos);
      }
      declared.insert(p.name);
      t.params.push_back(std::move(p));
    } else if (kw.text == "constraint") {
      constraints.push_back({expr()});
    } else if (kw.text == "let") {
      if (t.result) throw ParseError("'let' after 'return'", kw.pos);
      const auto pos = peek().pos;
      auto n = expect_name();
      if (declared.contains(n)) throw ParseError("'" + n + "' is already declared", pos);
      expect(Tok::assign);
      auto value = expr();
      check_scope(*value);
      if (checked_type(*value) != ValueType::number) throw ParseError("type error: 'let " + n + "' must be numeric", value->pos);
      declared.insert(n);
      let_index[n] = t.lets.size();
      t.lets.push_back({std::move(n), std::move(value)});
    } else if (kw.text == "return") {
      if (t.result) throw ParseError("duplicate 'return'", kw.pos);
      auto value = expr();
      check_scope(*value);
      if (checked_type(*value) != ValueType::number) throw ParseError("type error: 'return' must be numeric", value->pos);
      t.result = std::move(value);
    } else if (kw.text == "question") {
      if (have_question) throw ParseError("duplicate 'question'", kw.pos);
      question_pos = peek().pos;
      t.question = expect(Tok::string).text;
      have_question = true;
    } else if (kw.text == "original") {
      if (t.original_values) throw ParseError("duplicate 'original'", kw.pos);
      original_pos = kw.pos;
      expect(Tok::lbrace);
      Substitution values;
      if (!at(Tok::rbrace)) {
        for (;;) {
          const auto pos = peek().pos;
          auto n = expect_name();
          expect(Tok::colon);
          if (!values.emplace(n, rational_literal()).second) throw ParseError("duplicate original value for '" + n + "'", pos);
          if (!at(Tok::comma)) break;
          take();
        }
      }
      expect(Tok::rbrace);
      expect_keyword("answer");
      t.original_answer = rational_literal();
      t.original_values = std::move(values);
    } else {
      throw ParseError("unknown statement '" + kw.text + "'", kw.pos);
    }
    if (!at(Tok::end)) expect(Tok::semicolon);
  }

  if (!t.result) throw ParseError("template has no 'return' statement", peek().pos);
  if (!have_question) throw ParseError("template has no 'question' statement", peek().pos);

  for (auto& c : constraints) {
    check_scope(*c.expr);
    if (checked_type(*c.expr) != ValueType::boolean) {
      throw ParseError("type error: constraint must be a boolean expression", c.expr->pos);
    }
    std::vector<const Expr*> ids;
    collect_identifiers(*c.expr, ids);
    std::size_t ready = 0;
    for (const auto* id : ids) {
      if (auto it = let_index.find(std::get<Identifier>(id->node).name); it != let_index.end()) {
        ready = std::max(ready, it->second + 1);
      }
    }
    t.constraints.push_back({std::move(c.expr), ready});
  }

  // Placeholders: {name} must name a param; {{ and }} are literal braces.
  const auto& q = t.question;
  for (std::size_t k = 0; k < q.size(); ++k) {
    if (q[k] == '{') {
      if (k + 1 < q.size() && q[k + 1] == '{') {
        ++k;
        continue;
      }
      const auto close = q.find('}', k);
      if (close == std::string::npos) throw ParseError("unclosed '{' in question", question_pos);
      const auto n = q.substr(k + 1, close - k - 1);
      if (!t.find_param(n)) throw ParseError("question placeholder {" + n + "} does not name a param", question_pos);
      k = close;
    } else if (q[k] == '}') {
      if (k + 1 < q.size() && q[k + 1] == '}') {
        ++k;
        continue;
      }
      throw ParseError("unmatched '}' in question", question_pos);
    }
  }

  if (t.original_values) {
    for (const auto& [n, v] : *t.original_values) {
      if (!t.find_param(n)) throw ParseError("original value for undeclared param '" + n + "'", original_pos);
    }
    for (const auto& p : t.params) {
      if (!t.original_values->contains(p.name)) throw ParseError("original values miss param '" + p.name + "'", original_pos);
    }
  }
  return t;
}

}  // namespace

MathTemplate parse_template(std::string_view source, std::string name) {
  return Parser(source).parse_template(std::move(name));
}

ExprPtr parse_expression(std::string_view source) { return Parser(source).parse_lone_expression(); }

ValueType type_of(const Expr& e) { return checked_type(e); }

}  // namespace dataforge::mathgen
